#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wta/nn/rng.hpp"
#include "wta/nn/tensor.hpp"

namespace wta::data {

using Category = std::uint16_t;

// Category counts (l_1, ..., l_m) of the categorical latent factors.
class LatentStructure {
 public:
  LatentStructure() = default;
  explicit LatentStructure(std::vector<std::size_t> counts);

  std::span<const std::size_t> counts() const noexcept { return counts_; }
  std::size_t factors() const noexcept { return counts_.size(); }
  std::size_t count(std::size_t factor) const { return counts_.at(factor); }
  // l: length of the concatenated one-hot vector.
  std::size_t total_categories() const noexcept { return total_; }
  // p: number of distinct latent vectors, saturating at UINT64_MAX.
  std::uint64_t combinations() const noexcept { return combinations_; }
  // Column of the first category of `factor` in the one-hot vector.
  std::size_t offset(std::size_t factor) const { return offsets_.at(factor); }
  std::size_t factor_of_column(std::size_t column) const;
  bool uniform() const noexcept;
  bool empty() const noexcept { return counts_.empty(); }

  LatentStructure concat(const LatentStructure& other) const;

  friend bool operator==(const LatentStructure& a, const LatentStructure& b) {
    return a.counts_ == b.counts_;
  }

 private:
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
  std::uint64_t combinations_ = 0;
};

struct LatentSample {
  std::vector<Category> categories;  // one index per factor, zero based
  std::vector<double> onehot;        // length l, exactly one 1 per block
};

LatentSample make_sample(const LatentStructure& s, std::span<const Category> categories);
void write_onehot(const LatentStructure& s, std::span<const Category> categories,
                  std::span<double> out);
bool is_valid_onehot(const LatentStructure& s, std::span<const double> onehot);

// Independent uniform draw per factor.
LatentSample sample_latent(const LatentStructure& s, nn::Rng& rng);
void sample_categories(const LatentStructure& s, nn::Rng& rng, std::span<Category> out);

// Categories of the `index`-th latent vector in lexicographic order, where
// the first factor cycles slowest.
std::vector<Category> categories_at(const LatentStructure& s, std::uint64_t index);

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

// All p latent vectors as rows of a p x l binary matrix, lexicographic order.
struct CodeMatrix {
  LatentStructure structure;
  nn::Tensor2 rows;
  std::vector<Category> categories;  // p x m, row-major, aligned with `rows`

  std::size_t size() const noexcept { return rows.rows(); }
  std::span<const Category> categories_of(std::size_t row) const {
    return {categories.data() + row * structure.factors(), structure.factors()};
  }
};

CodeMatrix enumerate_code_matrix(const LatentStructure& s,
                                 std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace wta::data
