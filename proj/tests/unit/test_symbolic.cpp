#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "support/check.hpp"
#include "wta/data/latent.hpp"
#include "wta/error.hpp"
#include "wta/nn/ops.hpp"
#include "wta/symbolic/symbolic.hpp"
#include "wta/theory/structured.hpp"

using namespace wta;
using namespace wta::symbolic;
using data::LatentStructure;
using nn::Tensor2;

namespace {

// Builds codes row by row from a function of the categories.
template <class F>
Tensor2 codes_for(const data::CodeMatrix& c, std::size_t neurons, F&& winners) {
  Tensor2 out(c.size(), neurons);
  for (std::size_t r = 0; r < c.size(); ++r)
    for (std::size_t j : winners(r, c.categories_of(r))) out(r, j) = 1.0;
  return out;
}

Tensor2 repeat(const Tensor2& t, std::size_t times) {
  Tensor2 out(t.rows() * times, t.cols());
  for (std::size_t k = 0; k < times; ++k)
    for (std::size_t r = 0; r < t.rows(); ++r)
      std::copy(t.row(r).begin(), t.row(r).end(), out.row(k * t.rows() + r).begin());
  return out;
}

std::vector<CategoryStatus> statuses(const SymbolicVerdict& v) {
  std::vector<CategoryStatus> out;
  for (const auto& c : v.categories) out.push_back(c.status);
  return out;
}

}  // namespace

TEST_CASE("identity codes give a diagonal table and a fully symbolic verdict") {
  const LatentStructure s({2, 3});
  const auto c = data::enumerate_code_matrix(s);
  const auto t = build_activation_table(s, c.rows, c.rows);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (s.factor_of_column(i) == s.factor_of_column(j)) CHECK(t.probability(i, j) == (i == j ? 1.0 : 0.0));
  const auto v = check_symbolic(s, c.rows, c.rows, {2, 3}, true);
  CHECK(v.overall);
  CHECK(v.symbolic_categories == 5);
  CHECK(v.localized_factors == 2);
  for (std::size_t i = 0; i < 5; ++i) CHECK(v.categories[i].encoding == std::vector<std::size_t>{i});
}

TEST_CASE("rows of a head sum to one for every present category") {
  const LatentStructure s({3, 2});
  const auto c = data::enumerate_code_matrix(s);
  // Head 0 (3 neurons) tracks a mixture of both factors; head 1 (2 neurons) is factor 1.
  const auto z_hat = codes_for(c, 5, [](std::size_t, auto k) {
    return std::vector<std::size_t>{(k[0] + k[1]) % 3, 3 + k[1]};
  });
  const auto t = build_activation_table(s, c.rows, z_hat);
  for (std::size_t i = 0; i < 5; ++i) {
    double h0 = 0.0, h1 = 0.0;
    for (std::size_t j = 0; j < 3; ++j) h0 += t.probability(i, j);
    for (std::size_t j = 3; j < 5; ++j) h1 += t.probability(i, j);
    CHECK(h0 == doctest::Approx(1.0));
    CHECK(h1 == doctest::Approx(1.0));
  }
  // A single sample has only 0/1 probabilities.
  const auto one = build_activation_table(s, c.rows.gather_rows(std::vector<std::size_t>{2}),
                                          z_hat.gather_rows(std::vector<std::size_t>{2}));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK((one.probability(i, j) == 0.0 || one.probability(i, j) == 1.0));
}

TEST_CASE("two neurons sharing one category still make it symbolic") {
  const LatentStructure s({2, 2});
  const auto c = data::enumerate_code_matrix(s);
  const Tensor2 z = repeat(c.rows, 2);
  // Head 0: neurons 0 and 1 alternate for category 0 of factor 0, neuron 2 is category 1.
  Tensor2 z_hat(z.rows(), 5);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const auto k = c.categories_of(r % c.size());
    z_hat(r, k[0] == 0 ? (r % 2) : 2) = 1.0;
    z_hat(r, 3 + k[1]) = 1.0;
  }
  const auto v = check_symbolic(s, z, z_hat, {3, 2});
  CHECK(v.overall);
  CHECK(v.categories[0].encoding == std::vector<std::size_t>{0, 1});
  CHECK(v.categories[1].encoding == std::vector<std::size_t>{2});
  CHECK(v.localized_factors == 2);
}

TEST_CASE("one neuron active for two categories of a factor makes both ambiguous") {
  const LatentStructure s({3, 2});
  const auto c = data::enumerate_code_matrix(s);
  const auto z_hat = codes_for(c, 4, [](std::size_t, auto k) {
    return std::vector<std::size_t>{k[0] == 2 ? 1u : 0u, 2 + k[1]};
  });
  const auto v = check_symbolic(s, c.rows, z_hat, {2, 2}, true);
  CHECK_FALSE(v.overall);
  CHECK(statuses(v) == std::vector<CategoryStatus>{CategoryStatus::not_symbolic, CategoryStatus::not_symbolic,
                                                   CategoryStatus::symbolic, CategoryStatus::symbolic,
                                                   CategoryStatus::symbolic});
  CHECK(v.categories[0].encoding.empty());
  CHECK(v.symbolic_categories == 3);
  CHECK(v.localized_factors == 1);
}

TEST_CASE("a category that never occurs is unobserved") {
  const LatentStructure s({2, 2});
  const auto c = data::enumerate_code_matrix(s);
  const std::vector<std::size_t> keep{0, 1};  // factor 0 stays at category 0
  const auto z = c.rows.gather_rows(keep);
  const auto v = check_symbolic(s, z, z, {2, 2});
  CHECK(v.categories[1].status == CategoryStatus::unobserved);
  CHECK_FALSE(v.overall);
}

TEST_CASE("a factor split across two heads is not localized") {
  const LatentStructure s({2, 2});
  SymbolicVerdict v;
  v.head_sizes = {2, 2};
  v.categories.resize(4);
  v.categories[0].covering_heads = {0};
  v.categories[1].covering_heads = {1};
  v.categories[2].covering_heads = {1};
  v.categories[3].covering_heads = {1};
  CHECK(localized_factors(v, s) == 1);
  v.categories[3].covering_heads.clear();
  CHECK(localized_factors(v, s) == 0);
}

TEST_CASE("verdicts do not depend on row order") {
  const LatentStructure s({3, 3});
  const auto c = data::enumerate_code_matrix(s);
  nn::Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    // Random code: each head picks a neuron from a random function of the categories.
    std::vector<std::size_t> table0(9), table1(9);
    for (auto& v : table0) v = rng.below(3);
    for (auto& v : table1) v = 3 + rng.below(3);
    const auto z_hat = codes_for(c, 6, [&](std::size_t r, auto) { return std::vector<std::size_t>{table0[r], table1[r]}; });
    std::vector<std::size_t> order(c.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto a = check_symbolic(s, c.rows, z_hat, {3, 3});
    const auto b = check_symbolic(s, c.rows.gather_rows(order), z_hat.gather_rows(order), {3, 3});
    CHECK(to_json(a) == to_json(b));
  }
}

TEST_CASE("adding samples only turns verdicts from symbolic to not symbolic") {
  const LatentStructure s({3, 2});
  const auto c = data::enumerate_code_matrix(s);
  nn::Rng rng(4);
  int flips = 0;
  for (int trial = 0; trial < 200; ++trial) {
    // Mostly faithful code with occasional corrupted rows.
    Tensor2 z(24, 5), z_hat(24, 5);
    for (std::size_t r = 0; r < 24; ++r) {
      const std::size_t src = rng.below(c.size());
      std::copy(c.rows.row(src).begin(), c.rows.row(src).end(), z.row(r).begin());
      const auto k = c.categories_of(src);
      z_hat(r, rng.below(8) == 0 ? rng.below(3) : k[0]) = 1.0;
      z_hat(r, 3 + k[1]) = 1.0;
    }
    const std::size_t cut = 8 + rng.below(12);
    std::vector<std::size_t> head(cut);
    std::iota(head.begin(), head.end(), 0);
    const auto small = check_symbolic(s, z.gather_rows(head), z_hat.gather_rows(head), {3, 2});
    const auto large = check_symbolic(s, z, z_hat, {3, 2});
    for (std::size_t i = 0; i < 5; ++i) {
      if (large.categories[i].status == CategoryStatus::symbolic)
        CHECK(small.categories[i].status != CategoryStatus::not_symbolic);
      if (small.categories[i].status == CategoryStatus::symbolic &&
          large.categories[i].status == CategoryStatus::not_symbolic)
        ++flips;
    }
  }
  CHECK(flips > 0);
}

TEST_CASE("head assignment follows the most informative factor") {
  const LatentStructure s({3, 2});
  const auto c = data::enumerate_code_matrix(s);
  // Head 0 (2 neurons) encodes factor 1; head 1 (3 neurons) encodes factor 0.
  const auto z_hat = codes_for(c, 5, [](std::size_t, auto k) {
    return std::vector<std::size_t>{k[1], 2 + k[0]};
  });
  const auto t = build_activation_table(s, c.rows, z_hat);
  CHECK(assign_heads(t, std::vector<std::size_t>{2, 3}) == std::vector<std::size_t>{1, 0});
}

TEST_CASE("structured permutations are recovered from code matrices") {
  const LatentStructure s({3, 2});
  const auto c = data::enumerate_code_matrix(s);
  const auto id = recover_structured_permutation(c, c.rows);
  REQUIRE(id.has_value());
  for (std::size_t i = 0; i < 5; ++i) CHECK(id->matrix(i, i) == 1.0);

  const auto r0 = theory::make_structured_permutation(s, {0, 1}, {{2, 0, 1}, {1, 0}});
  const auto back = recover_structured_permutation(c, nn::matmul(c.rows, r0.matrix));
  REQUIRE(back.has_value());
  CHECK(back->matrix == r0.matrix);

  // Valid one-hot rows paired with the wrong latents.
  nn::Rng rng(5);
  int rejected = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> order(c.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const Tensor2 shuffled = c.rows.gather_rows(order);
    if (!recover_structured_permutation(c, shuffled)) ++rejected;
  }
  CHECK(rejected > 15);
}

TEST_CASE("readout cross check vanishes when the readout composes with the permutation") {
  const LatentStructure s({3, 2});
  const auto c = data::enumerate_code_matrix(s);
  nn::Rng rng(6);
  const Tensor2 w = wta::testing::random_tensor(8, 5, rng);
  const auto r0 = theory::make_structured_permutation(s, {0, 1}, {{1, 2, 0}, {1, 0}});
  const Tensor2 c_hat = nn::matmul(c.rows, r0.matrix);
  const Tensor2 w_out = nn::matmul(w, r0.matrix);
  CHECK(readout_cross_check(c.rows, c_hat, w, w_out) < 1e-10);
  CHECK(readout_cross_check(c.rows, c.rows, w, w_out) > 1e-3);
}

TEST_CASE("activation csv has one row per category and neuron") {
  const LatentStructure s({2, 3});
  const auto c = data::enumerate_code_matrix(s);
  const auto path = std::filesystem::temp_directory_path() / "wta_unit_activation.csv";
  write_activation_csv(path, build_activation_table(s, c.rows, c.rows));
  std::ifstream in(path);
  std::string line;
  std::size_t rows = 0;
  std::getline(in, line);
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5 * 5);
}

TEST_CASE("malformed checker input is rejected") {
  const LatentStructure s({2, 2});
  const auto c = data::enumerate_code_matrix(s);
  Tensor2 soft = c.rows;
  soft(0, 0) = 0.5;
  CHECK_THROWS_AS(check_symbolic(s, c.rows, soft), Error);
  CHECK_THROWS_AS(check_symbolic(s, c.rows, Tensor2(3, 4)), Error);
  CHECK_THROWS_AS(build_activation_table(s, Tensor2(0, 4), Tensor2(0, 4)), Error);
}
