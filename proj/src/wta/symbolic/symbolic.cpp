#include "wta/symbolic/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "wta/error.hpp"
#include "wta/nn/linalg.hpp"

namespace wta::symbolic {

using data::LatentStructure;
using nn::Tensor2;

namespace {

bool is_binary(const Tensor2& t) {
  for (double v : t.values())
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

const char* status_name(CategoryStatus s) {
  switch (s) {
    case CategoryStatus::symbolic: return "symbolic";
    case CategoryStatus::not_symbolic: return "not_symbolic";
    case CategoryStatus::unobserved: return "unobserved";
  }
  return "?";
}

}  // namespace

double ActivationTable::probability(std::size_t i, std::size_t j) const {
  return present[i] == 0 ? 0.0 : static_cast<double>(co(i, j)) / static_cast<double>(present[i]);
}

ActivationTable build_activation_table(const LatentStructure& s, const Tensor2& z, const Tensor2& z_hat) {
  require(z.rows() == z_hat.rows(), "latents and codes differ in sample count");
  require(z.rows() > 0, "activation table needs at least one sample");
  require(z.cols() == s.total_categories(), "latent width does not match the structure");
  require(is_binary(z_hat), "codes must be binary (eval-mode forward)");
  for (std::size_t r = 0; r < z.rows(); ++r)
    require(data::is_valid_onehot(s, z.row(r)), "latent row " + std::to_string(r) + " is not one-hot");

  const std::size_t l = s.total_categories(), k = z_hat.cols();
  ActivationTable t;
  t.structure = s;
  t.neurons = k;
  t.samples = z.rows();
  t.present.assign(l, 0);
  t.fired.assign(k, 0);
  t.together.assign(l * k, 0);
  t.without.assign(l * k, 0);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto zr = z.row(r);
    auto hr = z_hat.row(r);
    for (std::size_t i = 0; i < l; ++i) t.present[i] += zr[i] != 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (hr[j] == 0.0) continue;
      ++t.fired[j];
      for (std::size_t i = 0; i < l; ++i) ++(zr[i] != 0.0 ? t.together : t.without)[i * k + j];
    }
  }
  return t;
}

SymbolicVerdict check_symbolic(const LatentStructure& s, const Tensor2& z, const Tensor2& z_hat,
                               std::vector<std::size_t> head_sizes, bool exhaustive) {
  const auto table = build_activation_table(s, z, z_hat);
  const std::size_t l = s.total_categories(), k = z_hat.cols();
  if (head_sizes.empty()) head_sizes = {k};
  require(std::accumulate(head_sizes.begin(), head_sizes.end(), std::size_t{0}) == k,
          "head sizes do not add up to the code width");
  std::vector<std::size_t> head_of(k);
  for (std::size_t h = 0, j = 0; h < head_sizes.size(); ++h)
    for (std::size_t a = 0; a < head_sizes[h]; ++a) head_of[j++] = h;

  SymbolicVerdict v;
  v.head_sizes = head_sizes;
  v.exhaustive = exhaustive;
  v.categories.resize(l);
  for (std::size_t i = 0; i < l; ++i) {
    auto& c = v.categories[i];
    c.factor = s.factor_of_column(i);
    c.category = i - s.offset(c.factor);
    c.occurrences = table.present[i];
    for (std::size_t j = 0; j < k; ++j)
      if (table.fired[j] > 0 && table.absent(i, j) == 0) c.encoding.push_back(j);
  }

  // Second pass: which occurrences are witnessed by I_max, overall and per head.
  const std::size_t heads = head_sizes.size();
  std::vector<std::uint64_t> head_covered(l * heads, 0);
  std::vector<bool> hit(heads);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto zr = z.row(r);
    auto hr = z_hat.row(r);
    for (std::size_t i = 0; i < l; ++i) {
      if (zr[i] == 0.0) continue;
      std::fill(hit.begin(), hit.end(), false);
      bool any = false;
      for (auto j : v.categories[i].encoding)
        if (hr[j] != 0.0) {
          any = true;
          hit[head_of[j]] = true;
        }
      v.categories[i].covered += any;
      for (std::size_t h = 0; h < heads; ++h) head_covered[i * heads + h] += hit[h];
    }
  }

  v.overall = true;
  for (std::size_t i = 0; i < l; ++i) {
    auto& c = v.categories[i];
    if (c.occurrences == 0) {
      c.status = CategoryStatus::unobserved;
    } else {
      c.status = c.covered == c.occurrences ? CategoryStatus::symbolic : CategoryStatus::not_symbolic;
      for (std::size_t h = 0; h < heads; ++h)
        if (head_covered[i * heads + h] == c.occurrences) c.covering_heads.push_back(h);
    }
    if (c.status == CategoryStatus::symbolic) ++v.symbolic_categories;
    else v.overall = false;
  }
  v.localized_factors = localized_factors(v, s);
  return v;
}

std::size_t localized_factors(const SymbolicVerdict& verdict, const LatentStructure& s) {
  require(verdict.categories.size() == s.total_categories(), "verdict does not match the structure");
  std::size_t count = 0;
  for (std::size_t f = 0; f < s.factors(); ++f) {
    for (std::size_t h = 0; h < verdict.head_sizes.size(); ++h) {
      bool all = true;
      for (std::size_t a = 0; a < s.count(f) && all; ++a) {
        const auto& ch = verdict.categories[s.offset(f) + a].covering_heads;
        all = std::find(ch.begin(), ch.end(), h) != ch.end();
      }
      if (all) {
        ++count;
        break;
      }
    }
  }
  return count;
}

std::vector<std::size_t> assign_heads(const ActivationTable& table, std::span<const std::size_t> head_sizes) {
  const auto& s = table.structure;
  std::vector<std::size_t> out;
  std::size_t start = 0;
  for (std::size_t size : head_sizes) {
    require(start + size <= table.neurons, "head layout exceeds the code width");
    double best = -1.0;
    std::size_t best_factor = 0;
    for (std::size_t f = 0; f < s.factors(); ++f) {
      double score = 0.0;
      for (std::size_t a = 0; a < s.count(f); ++a)
        for (std::size_t j = start; j < start + size; ++j) {
          const double marginal = static_cast<double>(table.fired[j]) / static_cast<double>(table.samples);
          score += std::abs(table.probability(s.offset(f) + a, j) - marginal);
        }
      if (score > best) {
        best = score;
        best_factor = f;
      }
    }
    out.push_back(best_factor);
    start += size;
  }
  return out;
}

std::optional<theory::StructuredPermutation> recover_structured_permutation(const data::CodeMatrix& c,
                                                                            const Tensor2& c_hat) {
  require(c_hat.rows() == c.size(), "code matrices differ in row count");
  if (c_hat.cols() != c.structure.total_categories()) return std::nullopt;
  const auto ls = nn::least_squares(c.rows, c_hat);
  if (!(ls.residual < kRecoveryResidual)) return std::nullopt;
  // The solution is only fixed up to per-block constants summing to zero, so
  // normalize it through the Lemma 1 decomposition first.
  try {
    const auto dec = theory::verify_lemma1(c, ls.solution);
    for (auto b : dec.b)
      if (b != 0) return std::nullopt;
    return theory::is_structured_permutation(dec.q, c.structure);
  } catch (const Error&) {
    return std::nullopt;
  }
}

double readout_cross_check(const Tensor2& c, const Tensor2& c_hat, const Tensor2& w_folded, const Tensor2& w_out) {
  require(w_folded.rows() == w_out.rows(), "task counts differ");
  require(c.cols() == w_folded.cols() && c_hat.cols() == w_out.cols(), "code widths differ from weight widths");
  const auto x = nn::least_squares(w_folded, w_out);  // W X = W_out
  const Tensor2 g = x.solution.transposed();
  return nn::frobenius_distance(c, nn::matmul(c_hat, g));
}

nlohmann::json to_json(const SymbolicVerdict& v) {
  auto cats = nlohmann::json::array();
  for (const auto& c : v.categories)
    cats.push_back({{"factor", c.factor},
                    {"category", c.category},
                    {"encoding", c.encoding},
                    {"status", status_name(c.status)},
                    {"occurrences", c.occurrences},
                    {"covered", c.covered},
                    {"covering_heads", c.covering_heads}});
  return {{"overall", v.overall},
          {"evaluation", v.exhaustive ? "exact" : "empirical"},
          {"symbolic_categories", v.symbolic_categories},
          {"localized_factors", v.localized_factors},
          {"head_sizes", v.head_sizes},
          {"categories", cats}};
}

void write_activation_csv(const std::filesystem::path& path, const ActivationTable& table) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string());
  out << "category,factor,factor_category,neuron,probability\n";
  const auto& s = table.structure;
  char buf[40];
  for (std::size_t i = 0; i < s.total_categories(); ++i) {
    const std::size_t f = s.factor_of_column(i);
    for (std::size_t j = 0; j < table.neurons; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", table.probability(i, j));
      out << i << ',' << f << ',' << i - s.offset(f) << ',' << j << ',' << buf << '\n';
    }
  }
  if (!out) fail(ErrorCode::io, "write failed on " + path.string());
}

}  // namespace wta::symbolic
