#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "wta/error.hpp"
#include "wta/vision/sprites.hpp"

using namespace wta;
using namespace wta::vision;

TEST_CASE("sprite structure") {
  const auto s = sprite_structure();
  CHECK(s == data::LatentStructure({3, 8, 8, 10}));
  CHECK(s.combinations() == 1920);
}

TEST_CASE("palette is distinct, starts at red and avoids black") {
  const auto p = build_palette();
  REQUIRE(p.size() == kColors);
  CHECK(p[0] == Rgb{1.0, 0.0, 0.0});
  for (const auto& c : p) {
    CHECK(c != Rgb{0.0, 0.0, 0.0});
    for (double v : c) CHECK((v == 0.0 || v == 0.5 || v == 1.0));
  }
  CHECK(min_linf_distance(p) >= 0.5);
  CHECK(build_palette() == p);
}

TEST_CASE("a sprite occupies only its grid cell and uses its palette colour") {
  const auto palette = build_palette();
  const SpriteFactors f{Shape::heart, 5, 2, 7};
  const auto img = render(f, palette);
  REQUIRE(img.size() == kPixels);
  std::size_t lit = 0;
  for (std::size_t r = 0; r < kImageSize; ++r)
    for (std::size_t c = 0; c < kImageSize; ++c) {
      const double* px = &img[(r * kImageSize + c) * kChannels];
      const bool inside = r / kCell == f.pos_y && c / kCell == f.pos_x && in_shape(f.shape, r % kCell, c % kCell);
      for (std::size_t ch = 0; ch < 3; ++ch) CHECK(px[ch] == (inside ? palette[7][ch] : 0.0));
      lit += inside;
    }
  CHECK(lit > 0);
}

TEST_CASE("shapes have different masks") {
  std::set<std::vector<bool>> masks;
  for (auto shape : {Shape::rectangle, Shape::ellipse, Shape::heart}) {
    std::vector<bool> m;
    for (std::size_t r = 0; r < kCell; ++r)
      for (std::size_t c = 0; c < kCell; ++c) m.push_back(in_shape(shape, r, c));
    masks.insert(m);
  }
  CHECK(masks.size() == 3);
}

TEST_CASE("corpus is complete, pairwise distinct and reproducible") {
  const auto palette = build_palette();
  const auto corpus = build_corpus(palette);
  REQUIRE(corpus.count() == 1920);
  CHECK(corpus.x.cols() == kPixels);
  std::set<std::vector<double>> images;
  for (std::size_t i = 0; i < corpus.count(); ++i) images.insert({corpus.x.row(i).begin(), corpus.x.row(i).end()});
  CHECK(images.size() == 1920);
  const auto again = build_corpus(palette);
  CHECK(again.x == corpus.x);
  CHECK(again.categories == corpus.categories);
  // Lexicographic with shape slowest.
  CHECK(corpus.categories_of(0)[0] == 0);
  CHECK(corpus.categories_of(640)[0] == 1);
  CHECK(corpus.categories_of(1)[3] == 1);
  const auto f = factors_from_categories(corpus.categories_of(1000));
  const auto direct = render(f, palette);
  CHECK(std::equal(direct.begin(), direct.end(), corpus.x.row(1000).begin()));

  const auto split = make_vision_split(corpus);
  CHECK(split.train.size() == 1536);
  CHECK(split.val.size() == 192);
  CHECK(split.test.size() == 192);
  for (auto i : split.val) {
    CHECK(corpus.categories_of(i)[0] == 1);
    CHECK(corpus.categories_of(i)[3] < 3);
  }
  for (auto i : split.test) {
    CHECK(corpus.categories_of(i)[0] == 0);
    CHECK(corpus.categories_of(i)[3] >= 3);
    CHECK(corpus.categories_of(i)[3] < 6);
  }
}

TEST_CASE("png files carry the PNG signature") {
  const auto path = std::filesystem::temp_directory_path() / "wta_unit_sprite.png";
  write_png(path, render({Shape::ellipse, 0, 0, 0}, build_palette()));
  std::ifstream in(path, std::ios::binary);
  std::string head(8, '\0');
  in.read(head.data(), 8);
  CHECK(head == std::string("\x89PNG\r\n\x1a\n", 8));
  CHECK_THROWS_AS(write_png(path, std::vector<double>(10)), Error);
}
