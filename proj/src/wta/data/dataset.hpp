#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "wta/data/entanglement.hpp"
#include "wta/data/latent.hpp"
#include "wta/nn/rng.hpp"
#include "wta/nn/tensor.hpp"

namespace wta::data {

// Paired latent categories and observations. Only the task-visible factors
// are stored; confounding factors influence x but are dropped afterwards.
struct Dataset {
  LatentStructure structure;
  std::vector<Category> categories;  // count x m, row-major
  nn::Tensor2 x;                     // count x d

  std::size_t count() const noexcept { return x.rows(); }
  std::size_t input_dim() const noexcept { return x.cols(); }
  std::span<const Category> categories_of(std::size_t i) const {
    return {categories.data() + i * structure.factors(), structure.factors()};
  }
  nn::Tensor2 onehots() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

// i.i.d. draws of z (plus confounders when given), x = Phi(z ; confounders).
Dataset make_dataset(const LatentStructure& structure, const EntanglementMap& map,
                     std::size_t count, nn::Rng& rng,
                     const std::optional<LatentStructure>& confounders = std::nullopt);

// Observations for explicitly given categories (no confounders).
Dataset dataset_from_categories(const LatentStructure& structure, const EntanglementMap& map,
                                std::vector<Category> categories);

// Every latent vector of the structure, lexicographic order.
Dataset enumerate_dataset(const LatentStructure& structure, const EntanglementMap& map);

// Columnar binary format: magic, version, m, l_1..l_m, d, count, then the
// row-major float64 x block and the row-major uint16 category block.
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds);

}  // namespace wta::data
