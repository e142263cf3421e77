#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "wta/data/latent.hpp"
#include "wta/nn/tensor.hpp"
#include "wta/theory/structured.hpp"

namespace wta::symbolic {

// Co-activation counts between latent categories (rows, the l one-hot
// columns of z) and binary code neurons (columns of z_hat).
struct ActivationTable {
  data::LatentStructure structure;
  std::size_t neurons = 0;
  std::uint64_t samples = 0;
  std::vector<std::uint64_t> present;        // per category: #samples with z_i = 1
  std::vector<std::uint64_t> fired;          // per neuron: #samples with z_hat_j = 1
  std::vector<std::uint64_t> together;       // l x neurons: z_i = 1 and z_hat_j = 1
  std::vector<std::uint64_t> without;        // l x neurons: z_i = 0 and z_hat_j = 1

  std::uint64_t co(std::size_t i, std::size_t j) const { return together[i * neurons + j]; }
  std::uint64_t absent(std::size_t i, std::size_t j) const { return without[i * neurons + j]; }
  // P(z_hat_j = 1 | z_i = 1); zero for a category that never occurs.
  double probability(std::size_t i, std::size_t j) const;
};

// z: N x l one-hot latents, z_hat: N x k binary codes.
ActivationTable build_activation_table(const data::LatentStructure& s, const nn::Tensor2& z,
                                       const nn::Tensor2& z_hat);

enum class CategoryStatus { symbolic, not_symbolic, unobserved };

struct CategoryVerdict {
  std::size_t factor = 0;
  std::size_t category = 0;
  std::vector<std::size_t> encoding;       // maximal candidate set I_max
  CategoryStatus status = CategoryStatus::unobserved;
  std::uint64_t occurrences = 0;
  std::uint64_t covered = 0;               // occurrences with some encoding neuron active
  std::vector<std::size_t> covering_heads; // heads whose part of I_max alone covers every occurrence
};

struct SymbolicVerdict {
  std::vector<CategoryVerdict> categories;  // one per one-hot column, in structure order
  std::vector<std::size_t> head_sizes;
  std::size_t symbolic_categories = 0;
  std::size_t localized_factors = 0;
  bool overall = false;
  bool exhaustive = false;  // evaluated on all of Z rather than a sample
};

// Decides the symbolic conditions per category. A neuron belongs to I_max of
// category i when it fired at least once and never while z_i = 0; the
// category is symbolic when every occurrence has an I_max neuron active.
// Neurons are grouped by `head_sizes` (empty means one group) for the
// localized-factor count.
SymbolicVerdict check_symbolic(const data::LatentStructure& s, const nn::Tensor2& z, const nn::Tensor2& z_hat,
                               std::vector<std::size_t> head_sizes = {}, bool exhaustive = false);

// Factors for which one head alone encodes every category.
std::size_t localized_factors(const SymbolicVerdict& verdict, const data::LatentStructure& s);

// Head -> factor with the largest summed |P(z_hat_j | z_i) - P(z_hat_j)| over
// the head's neurons and the factor's categories. Heuristic.
std::vector<std::size_t> assign_heads(const ActivationTable& table, std::span<const std::size_t> head_sizes);

inline constexpr double kRecoveryResidual = 1e-8;

// Solves C R = C_hat and returns R when it is (decomposes into) a structured
// permutation. C_hat rows must be the codes of C's rows in the same order.
std::optional<theory::StructuredPermutation> recover_structured_permutation(const data::CodeMatrix& c,
                                                                            const nn::Tensor2& c_hat);

// G = (pinv(W) W_out)^T relates the two code matrices through the trained
// readout; returns ||C - C_hat G||_F. Only meaningful when W has full column rank.
double readout_cross_check(const nn::Tensor2& c, const nn::Tensor2& c_hat, const nn::Tensor2& w_folded,
                           const nn::Tensor2& w_out);

nlohmann::json to_json(const SymbolicVerdict& v);
void write_activation_csv(const std::filesystem::path& path, const ActivationTable& table);

}  // namespace wta::symbolic
