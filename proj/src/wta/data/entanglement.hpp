#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wta/data/latent.hpp"
#include "wta/nn/tensor.hpp"

namespace wta::data {

struct EntanglementConfig {
  std::vector<std::size_t> dims;  // input (= one-hot length), hidden..., output
  double slope = 0.01;
  bool bias = true;
};

// Frozen random MLP mapping one-hot latents to observations. Leaky ReLU
// between layers, none after the last one.
class EntanglementMap {
 public:
  struct Layer {
    nn::Tensor2 weights;
    std::vector<double> bias;  // empty when biases are disabled
  };

  EntanglementMap(EntanglementConfig config, std::uint64_t seed);
  EntanglementMap(EntanglementConfig config, std::uint64_t seed, std::vector<Layer> layers);

  const EntanglementConfig& config() const noexcept { return config_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t input_dim() const noexcept { return config_.dims.front(); }
  std::size_t output_dim() const noexcept { return config_.dims.back(); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  // Rows of `onehots` are latent vectors; returns one observation per row.
  nn::Tensor2 apply(const nn::Tensor2& onehots) const;
  std::vector<double> apply(std::span<const double> onehot) const;

 private:
  EntanglementConfig config_;
  std::uint64_t seed_;
  std::vector<Layer> layers_;
};

EntanglementMap build_entanglement(const LatentStructure& full_structure,
                                   const EntanglementConfig& config, std::uint64_t seed);

// Smallest pairwise L2 distance between rows.
double min_pairwise_distance(const nn::Tensor2& rows);

// Two distinct latent rows whose observations are bit-identical, if any.
std::optional<std::pair<std::size_t, std::size_t>> find_collision(const nn::Tensor2& latents,
                                                                   const nn::Tensor2& observations);

inline constexpr std::uint64_t kExhaustiveInjectivityLimit = 6000;
inline constexpr double kMinDistinctDistance = 1e-6;

struct InjectiveBuild {
  EntanglementMap map;
  std::uint32_t attempts = 1;
  bool exhaustive = false;   // pairwise distinctness checked over every latent vector
  double min_distance = 0.0; // only meaningful when exhaustive
};

// Draws maps until one passes the empirical injectivity check. Structures
// with at most kExhaustiveInjectivityLimit vectors are checked exhaustively;
// larger ones only get the structural checks here and must be screened on
// the sampled data with find_collision.
InjectiveBuild build_injective_entanglement(const LatentStructure& full_structure,
                                            const EntanglementConfig& config, std::uint64_t seed,
                                            std::uint32_t max_attempts = 16);

void write_entanglement(const std::filesystem::path& path, const EntanglementMap& map);
EntanglementMap read_entanglement(const std::filesystem::path& path);

}  // namespace wta::data
