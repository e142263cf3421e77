#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wta/data/latent.hpp"
#include "wta/nn/tensor.hpp"

namespace wta::theory {

// A permutation of the l one-hot columns that maps every factor block onto a
// block of equal size and permutes categories inside it.
struct StructuredPermutation {
  data::LatentStructure structure;
  std::vector<std::size_t> factor_map;               // block i -> block s[i]
  std::vector<std::vector<std::size_t>> block_perms; // category a of block i -> category of block s[i]
  nn::Tensor2 matrix;                                // l x l, R(offset_i + a, offset_s[i] + perm[a]) = 1
};

inline constexpr double kPermutationTol = 1e-9;

// Builds the matrix from a factor map and per-block permutations; throws if
// the pieces are inconsistent with the structure.
StructuredPermutation make_structured_permutation(const data::LatentStructure& s,
                                                  std::vector<std::size_t> factor_map,
                                                  std::vector<std::vector<std::size_t>> block_perms);

// Returns the witness when R is entrywise within `tol` of a structured
// permutation matrix for `s`.
std::optional<StructuredPermutation> is_structured_permutation(const nn::Tensor2& r,
                                                               const data::LatentStructure& s,
                                                               double tol = kPermutationTol);

// Every structured permutation for `s`, in a fixed order.
std::vector<StructuredPermutation> enumerate_structured_permutations(const data::LatentStructure& s);
// (block permutations among equal sizes) x prod(l_i!), without enumerating.
std::uint64_t count_structured_permutations(const data::LatentStructure& s);

struct Lemma1Decomposition {
  nn::Tensor2 q;                   // l x l, entries 0/1
  std::vector<std::int64_t> b;     // length l
};

// Splits D = C R (binary within 1e-9) into C Q + 1 b^T. Every block of a
// column of R takes at most two values one apart; Q marks the upper value.
Lemma1Decomposition verify_lemma1(const data::CodeMatrix& c, const nn::Tensor2& r,
                                  double tol = kPermutationTol);

// Every column of the code matrix sums to p / l_i.
bool column_sum_property(const data::CodeMatrix& c);

enum class TheoremMode { exhaustive, sampled };

struct TheoremOptions {
  TheoremMode mode = TheoremMode::exhaustive;
  std::uint64_t trials = 10000;   // sampled mode only
  std::uint64_t seed = 0;         // sampled mode only
  std::size_t max_counterexamples = 5;
};

inline constexpr std::uint64_t kExhaustiveBijectionLimit = 500'000;
inline constexpr double kRealizableResidual = 1e-9;

struct TheoremReport {
  data::LatentStructure structure;
  TheoremMode mode = TheoremMode::exhaustive;
  bool conjecture = false;  // unequal block sizes: outside the proven statement
  std::uint64_t bijections_tested = 0;
  std::uint64_t realizable = 0;
  std::uint64_t structured = 0;
  std::uint64_t violations = 0;
  std::uint64_t column_sum_checks = 0;  // Q column sums checked on realizable cases
  std::vector<nlohmann::json> counterexamples;
  double runtime_seconds = 0.0;

  bool holds() const noexcept { return violations == 0; }
};

// For row bijections P, tests whether P C = C R is solvable and, when it is,
// that R decomposes into a structured permutation with b = 0.
TheoremReport verify_theorem1(const data::LatentStructure& s, const TheoremOptions& options = {});
TheoremReport verify_theorem1(std::size_t m, std::size_t l_c, const TheoremOptions& options = {});

nlohmann::json to_json(const StructuredPermutation& p);
nlohmann::json to_json(const TheoremReport& r);

}  // namespace wta::theory
