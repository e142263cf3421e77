#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "wta/data/dataset.hpp"
#include "wta/data/latent.hpp"
#include "wta/generalization/generalization.hpp"
#include "wta/nn/tensor.hpp"

namespace wta::vision {

enum class Shape : std::uint8_t { rectangle = 0, ellipse = 1, heart = 2 };

inline constexpr std::size_t kImageSize = 64;
inline constexpr std::size_t kChannels = 3;
inline constexpr std::size_t kGrid = 8;                       // positions per axis
inline constexpr std::size_t kCell = kImageSize / kGrid;      // pixels per grid cell
inline constexpr std::size_t kPixels = kImageSize * kImageSize * kChannels;
inline constexpr std::size_t kColors = 10;

struct SpriteFactors {
  Shape shape = Shape::rectangle;
  std::size_t pos_x = 0;  // column cell
  std::size_t pos_y = 0;  // row cell
  std::size_t color = 0;
};

using Rgb = std::array<double, 3>;

// (shape, pos-x, pos-y, color) = (3, 8, 8, 10).
data::LatentStructure sprite_structure();

// Greedy farthest-point picks from the {0, 0.5, 1}^3 lattice without black,
// starting from pure red. Deterministic.
std::vector<Rgb> build_palette(std::size_t count = kColors);
double min_linf_distance(const std::vector<Rgb>& palette);

// Whether the pixel at (row, col) of a cell-local 8x8 patch belongs to the shape.
bool in_shape(Shape shape, std::size_t row, std::size_t col);

// 64x64x3, row-major with interleaved channels; background is 0.
std::vector<double> render(const SpriteFactors& f, const std::vector<Rgb>& palette);

SpriteFactors factors_from_categories(std::span<const data::Category> c);

// All 1920 images in lexicographic factor order (shape slowest).
data::Dataset build_corpus(const std::vector<Rgb>& palette);

// validation: ellipse x colors {0,1,2}; test: rectangle x colors {3,4,5}; rest train.
generalization::Split make_vision_split(const data::Dataset& corpus);

void write_png(const std::filesystem::path& path, std::span<const double> image);

}  // namespace wta::vision
