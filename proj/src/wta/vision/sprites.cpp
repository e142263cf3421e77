#include "wta/vision/sprites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "wta/error.hpp"

namespace wta::vision {

data::LatentStructure sprite_structure() { return data::LatentStructure({3, kGrid, kGrid, kColors}); }

namespace {

double linf(const Rgb& a, const Rgb& b) {
  return std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
}

double l2sq(const Rgb& a, const Rgb& b) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return s;
}

}  // namespace

std::vector<Rgb> build_palette(std::size_t count) {
  std::vector<Rgb> lattice;
  for (int r = 2; r >= 0; --r)
    for (int g = 0; g <= 2; ++g)
      for (int b = 0; b <= 2; ++b)
        if (r + g + b > 0) lattice.push_back({r * 0.5, g * 0.5, b * 0.5});
  require(count >= 1 && count <= lattice.size(), "palette size must lie in [1, 26]");

  // lattice[0] is pure red; then repeatedly take the candidate farthest (L2)
  // from everything chosen, preferring the earlier lattice point on ties.
  std::vector<Rgb> chosen{lattice.front()};
  std::vector<bool> used(lattice.size(), false);
  used[0] = true;
  while (chosen.size() < count) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      if (used[i]) continue;
      double d = INFINITY;
      for (const auto& c : chosen) d = std::min(d, l2sq(lattice[i], c));
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    used[best] = true;
    chosen.push_back(lattice[best]);
  }
  return chosen;
}

double min_linf_distance(const std::vector<Rgb>& palette) {
  double d = INFINITY;
  for (std::size_t i = 0; i < palette.size(); ++i)
    for (std::size_t j = i + 1; j < palette.size(); ++j) d = std::min(d, linf(palette[i], palette[j]));
  return d;
}

bool in_shape(Shape shape, std::size_t row, std::size_t col) {
  if (row == 0 || col == 0 || row + 1 >= kCell || col + 1 >= kCell) return false;  // 1-pixel margin
  // Pixel centre relative to the cell centre, y pointing up.
  const double u = static_cast<double>(col) + 0.5 - kCell / 2.0;
  const double v = kCell / 2.0 - (static_cast<double>(row) + 0.5);
  switch (shape) {
    case Shape::rectangle:
      return true;
    case Shape::ellipse:
      return (u / 3.0) * (u / 3.0) + (v / 2.0) * (v / 2.0) <= 1.0;
    case Shape::heart: {
      const double x = u / 2.7, y = v / 2.7 + 0.25;
      const double a = x * x + y * y - 1.0;
      return a * a * a - x * x * y * y * y <= 0.0;
    }
  }
  return false;
}

std::vector<double> render(const SpriteFactors& f, const std::vector<Rgb>& palette) {
  require(f.pos_x < kGrid && f.pos_y < kGrid, "sprite position outside the grid");
  require(f.color < palette.size(), "sprite colour outside the palette");
  std::vector<double> img(kPixels, 0.0);
  const Rgb& rgb = palette[f.color];
  for (std::size_t r = 0; r < kCell; ++r)
    for (std::size_t c = 0; c < kCell; ++c) {
      if (!in_shape(f.shape, r, c)) continue;
      const std::size_t y = f.pos_y * kCell + r, x = f.pos_x * kCell + c;
      for (std::size_t ch = 0; ch < kChannels; ++ch) img[(y * kImageSize + x) * kChannels + ch] = rgb[ch];
    }
  return img;
}

SpriteFactors factors_from_categories(std::span<const data::Category> c) {
  require(c.size() == 4 && c[0] < 3, "sprite categories must be (shape, x, y, colour)");
  return {static_cast<Shape>(c[0]), c[1], c[2], c[3]};
}

data::Dataset build_corpus(const std::vector<Rgb>& palette) {
  require(palette.size() == kColors, "the corpus uses a 10-colour palette");
  const auto s = sprite_structure();
  const auto code = data::enumerate_code_matrix(s);
  data::Dataset ds;
  ds.structure = s;
  ds.categories = code.categories;
  ds.x = nn::Tensor2(code.size(), kPixels);
  for (std::size_t i = 0; i < code.size(); ++i) {
    const auto img = render(factors_from_categories(code.categories_of(i)), palette);
    std::copy(img.begin(), img.end(), ds.x.row(i).begin());
  }
  return ds;
}

generalization::Split make_vision_split(const data::Dataset& corpus) {
  require(corpus.structure == sprite_structure(), "not a sprite corpus");
  generalization::Split split;
  for (std::size_t i = 0; i < corpus.count(); ++i) {
    const auto c = corpus.categories_of(i);
    const auto shape = static_cast<Shape>(c[0]);
    if (shape == Shape::ellipse && c[3] <= 2) split.val.push_back(i);
    else if (shape == Shape::rectangle && c[3] >= 3 && c[3] <= 5) split.test.push_back(i);
    else split.train.push_back(i);
  }
  return split;
}

void write_png(const std::filesystem::path& path, std::span<const double> image) {
  require(image.size() == kPixels, "image must be 64x64x3");
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) fail(ErrorCode::io, "cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::internal, "libpng initialisation failed");
  }
  std::vector<png_byte> bytes(kPixels);
  for (std::size_t i = 0; i < kPixels; ++i)
    bytes[i] = static_cast<png_byte>(std::lround(std::clamp(image[i], 0.0, 1.0) * 255.0));
  std::vector<png_bytep> rows(kImageSize);
  for (std::size_t r = 0; r < kImageSize; ++r) rows[r] = bytes.data() + r * kImageSize * kChannels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::io, "PNG encoding failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, kImageSize, kImageSize, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace wta::vision
