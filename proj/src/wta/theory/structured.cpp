#include "wta/theory/structured.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include "wta/error.hpp"
#include "wta/nn/linalg.hpp"
#include "wta/nn/rng.hpp"

namespace wta::theory {

using data::LatentStructure;
using nn::Tensor2;

namespace {

bool near(double v, double target, double tol) { return std::abs(v - target) <= tol; }

std::uint64_t factorial(std::uint64_t n) {
  std::uint64_t f = 1;
  for (std::uint64_t k = 2; k <= n; ++k) {
    if (f > UINT64_MAX / k) return UINT64_MAX;
    f *= k;
  }
  return f;
}

std::vector<std::vector<std::size_t>> all_permutations(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<std::size_t>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

bool is_permutation_of_n(const std::vector<std::size_t>& p, std::size_t n) {
  if (p.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (auto v : p) {
    if (v >= n || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

}  // namespace

StructuredPermutation make_structured_permutation(const LatentStructure& s,
                                                  std::vector<std::size_t> factor_map,
                                                  std::vector<std::vector<std::size_t>> block_perms) {
  const std::size_t m = s.factors();
  require(is_permutation_of_n(factor_map, m), "factor map is not a permutation of the factors");
  require(block_perms.size() == m, "one category permutation per factor is required");
  const std::size_t l = s.total_categories();
  Tensor2 r(l, l);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t t = factor_map[i];
    require(s.count(i) == s.count(t), "a factor may only map onto a factor with equal category count");
    require(is_permutation_of_n(block_perms[i], s.count(i)), "block permutation is malformed");
    for (std::size_t a = 0; a < s.count(i); ++a) r(s.offset(i) + a, s.offset(t) + block_perms[i][a]) = 1.0;
  }
  return {s, std::move(factor_map), std::move(block_perms), std::move(r)};
}

std::optional<StructuredPermutation> is_structured_permutation(const Tensor2& r, const LatentStructure& s,
                                                               double tol) {
  const std::size_t l = s.total_categories();
  if (r.rows() != l || r.cols() != l) return std::nullopt;

  std::vector<std::size_t> target(l);
  std::vector<std::size_t> col_hits(l, 0);
  for (std::size_t i = 0; i < l; ++i) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < l; ++j) {
      const double v = r(i, j);
      if (near(v, 1.0, tol)) {
        ++ones;
        target[i] = j;
        ++col_hits[j];
      } else if (!near(v, 0.0, tol)) {
        return std::nullopt;
      }
    }
    if (ones != 1) return std::nullopt;
  }
  for (auto h : col_hits)
    if (h != 1) return std::nullopt;

  std::vector<std::size_t> factor_map(s.factors());
  std::vector<std::vector<std::size_t>> perms(s.factors());
  for (std::size_t i = 0; i < s.factors(); ++i) {
    const std::size_t t = s.factor_of_column(target[s.offset(i)]);
    if (s.count(t) != s.count(i)) return std::nullopt;
    factor_map[i] = t;
    for (std::size_t a = 0; a < s.count(i); ++a) {
      const std::size_t col = target[s.offset(i) + a];
      if (s.factor_of_column(col) != t) return std::nullopt;
      perms[i].push_back(col - s.offset(t));
    }
  }
  return make_structured_permutation(s, std::move(factor_map), std::move(perms));
}

std::uint64_t count_structured_permutations(const LatentStructure& s) {
  std::map<std::size_t, std::uint64_t> groups;
  std::uint64_t n = 1;
  for (auto c : s.counts()) {
    ++groups[c];
    n *= factorial(c);
  }
  for (const auto& [size, k] : groups) n *= factorial(k);
  return n;
}

std::vector<StructuredPermutation> enumerate_structured_permutations(const LatentStructure& s) {
  require(count_structured_permutations(s) <= 1'000'000, "too many structured permutations to enumerate");
  const std::size_t m = s.factors();
  std::vector<std::vector<std::vector<std::size_t>>> inner(m);
  for (std::size_t i = 0; i < m; ++i) inner[i] = all_permutations(s.count(i));

  std::vector<StructuredPermutation> out;
  for (const auto& fmap : all_permutations(m)) {
    bool ok = true;
    for (std::size_t i = 0; i < m; ++i) ok = ok && s.count(i) == s.count(fmap[i]);
    if (!ok) continue;
    std::vector<std::size_t> pick(m, 0);  // odometer over the per-block permutation lists
    while (true) {
      std::vector<std::vector<std::size_t>> perms(m);
      for (std::size_t i = 0; i < m; ++i) perms[i] = inner[i][pick[i]];
      out.push_back(make_structured_permutation(s, fmap, std::move(perms)));
      bool wrapped = true;
      for (std::size_t k = m; k-- > 0;) {
        if (++pick[k] < inner[k].size()) {
          wrapped = false;
          break;
        }
        pick[k] = 0;
      }
      if (wrapped) break;
    }
  }
  return out;
}

Lemma1Decomposition verify_lemma1(const data::CodeMatrix& c, const Tensor2& r, double tol) {
  const LatentStructure& s = c.structure;
  const std::size_t l = s.total_categories();
  require(r.rows() == l, "R must have l rows");
  const Tensor2 d = nn::matmul(c.rows, r);
  for (double v : d.values())
    if (!near(v, 0.0, tol) && !near(v, 1.0, tol)) fail(ErrorCode::invalid_argument, "C R is not binary");

  Lemma1Decomposition out{Tensor2(l, r.cols()), std::vector<std::int64_t>(r.cols(), 0)};
  for (std::size_t j = 0; j < r.cols(); ++j) {
    double base_sum = 0.0;
    for (std::size_t f = 0; f < s.factors(); ++f) {
      const std::size_t off = s.offset(f), n = s.count(f);
      double lo = r(off, j), hi = r(off, j);
      for (std::size_t a = 1; a < n; ++a) {
        lo = std::min(lo, r(off + a, j));
        hi = std::max(hi, r(off + a, j));
      }
      if (!near(hi - lo, 0.0, tol) && !near(hi - lo, 1.0, tol))
        fail(ErrorCode::internal, "two-value property violated in column " + std::to_string(j));
      for (std::size_t a = 0; a < n; ++a) out.q(off + a, j) = near(r(off + a, j), lo, tol) ? 0.0 : 1.0;
      base_sum += lo;
    }
    const double rounded = std::round(base_sum);
    if (!near(base_sum, rounded, 1e-6))
      fail(ErrorCode::internal, "offset of column " + std::to_string(j) + " is not an integer");
    out.b[j] = static_cast<std::int64_t>(rounded);
  }

  // Exact reconstruction D = C Q + 1 b^T.
  const Tensor2 cq = nn::matmul(c.rows, out.q);
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j)
      if (cq(i, j) + static_cast<double>(out.b[j]) != std::round(d(i, j)))
        fail(ErrorCode::internal, "Lemma 1 reconstruction failed");
  return out;
}

bool column_sum_property(const data::CodeMatrix& c) {
  const auto& s = c.structure;
  const double p = static_cast<double>(c.size());
  for (std::size_t j = 0; j < s.total_categories(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) sum += c.rows(i, j);
    if (sum != p / static_cast<double>(s.count(s.factor_of_column(j)))) return false;
  }
  return true;
}

namespace {

nlohmann::json matrix_json(const Tensor2& t) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    auto row = t.row(i);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

class TheoremChecker {
 public:
  TheoremChecker(const LatentStructure& s, TheoremReport& report, std::size_t max_examples)
      : c_(data::enumerate_code_matrix(s)), report_(report), max_examples_(max_examples) {}

  const data::CodeMatrix& code() const { return c_; }

  void check(const std::vector<std::size_t>& bijection) {
    ++report_.bijections_tested;
    const std::size_t p = c_.size(), l = c_.structure.total_categories();
    Tensor2 d(p, l);
    for (std::size_t i = 0; i < p; ++i) std::copy_n(c_.rows.row(bijection[i]).begin(), l, d.row(i).begin());

    const auto ls = nn::least_squares(c_.rows, d);
    if (ls.residual >= kRealizableResidual) return;
    ++report_.realizable;

    std::string reason;
    try {
      const auto dec = verify_lemma1(c_, ls.solution);
      for (std::size_t j = 0; j < l && reason.empty(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < l; ++i) col += dec.q(i, j);
        ++report_.column_sum_checks;
        if (col != 1.0) reason = "column " + std::to_string(j) + " of Q does not sum to 1";
        else if (dec.b[j] != 0) reason = "offset b is nonzero in column " + std::to_string(j);
      }
      if (reason.empty()) {
        if (is_structured_permutation(dec.q, c_.structure)) {
          ++report_.structured;
          return;
        }
        reason = "Q is not a structured permutation";
      }
      if (report_.counterexamples.size() < max_examples_)
        report_.counterexamples.push_back(
            {{"bijection", bijection}, {"reason", reason}, {"Q", matrix_json(dec.q)}, {"b", dec.b}});
    } catch (const Error& e) {
      reason = e.what();
      if (report_.counterexamples.size() < max_examples_)
        report_.counterexamples.push_back(
            {{"bijection", bijection}, {"reason", reason}, {"R", matrix_json(ls.solution)}});
    }
    ++report_.violations;
  }

  // Row pairing induced by a structured permutation: row i of C R is row P[i] of C.
  std::vector<std::size_t> induced_bijection(const StructuredPermutation& sp) const {
    if (row_index_.empty())
      for (std::size_t i = 0; i < c_.size(); ++i) {
        auto row = c_.rows.row(i);
        row_index_.emplace(std::vector<double>(row.begin(), row.end()), i);
      }
    const Tensor2 cr = nn::matmul(c_.rows, sp.matrix);
    std::vector<std::size_t> out(c_.size());
    for (std::size_t i = 0; i < c_.size(); ++i) {
      auto row = cr.row(i);
      out[i] = row_index_.at(std::vector<double>(row.begin(), row.end()));
    }
    return out;
  }

 private:
  data::CodeMatrix c_;
  TheoremReport& report_;
  std::size_t max_examples_;
  mutable std::map<std::vector<double>, std::size_t> row_index_;
};

}  // namespace

TheoremReport verify_theorem1(const LatentStructure& s, const TheoremOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  TheoremReport report;
  report.structure = s;
  report.mode = options.mode;
  report.conjecture = !s.uniform();

  TheoremChecker checker(s, report, options.max_counterexamples);
  const std::size_t p = checker.code().size();
  std::vector<std::size_t> bijection(p);
  std::iota(bijection.begin(), bijection.end(), 0);

  if (options.mode == TheoremMode::exhaustive) {
    if (factorial(p) > kExhaustiveBijectionLimit)
      fail(ErrorCode::invalid_argument,
           "exhaustive mode needs p! <= 500000; p = " + std::to_string(p) + ", use sampled mode");
    do checker.check(bijection);
    while (std::next_permutation(bijection.begin(), bijection.end()));
  } else {
    // Half uniform bijections, half induced by random structured permutations,
    // so both branches of the implication are exercised.
    nn::Rng rng(options.seed);
    const auto structured = enumerate_structured_permutations(s);
    for (std::uint64_t t = 0; t < options.trials; ++t) {
      if (t % 2 == 0) {
        std::iota(bijection.begin(), bijection.end(), 0);
        for (std::size_t i = p; i > 1; --i) std::swap(bijection[i - 1], bijection[rng.below(i)]);
        checker.check(bijection);
      } else {
        checker.check(checker.induced_bijection(structured[rng.below(structured.size())]));
      }
    }
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

TheoremReport verify_theorem1(std::size_t m, std::size_t l_c, const TheoremOptions& options) {
  require(m >= 1 && l_c >= 2, "need m >= 1 and l_c >= 2");
  return verify_theorem1(LatentStructure(std::vector<std::size_t>(m, l_c)), options);
}

nlohmann::json to_json(const StructuredPermutation& p) {
  return {{"structure", std::vector<std::size_t>(p.structure.counts().begin(), p.structure.counts().end())},
          {"factor_map", p.factor_map},
          {"block_permutations", p.block_perms},
          {"matrix", matrix_json(p.matrix)}};
}

nlohmann::json to_json(const TheoremReport& r) {
  return {{"instance", std::vector<std::size_t>(r.structure.counts().begin(), r.structure.counts().end())},
          {"mode", r.mode == TheoremMode::exhaustive ? "exhaustive" : "sampled"},
          {"label", r.conjecture ? "conjecture check" : "theorem check"},
          {"bijections_tested", r.bijections_tested},
          {"realizable", r.realizable},
          {"structured", r.structured},
          {"violations", r.violations},
          {"column_sum_checks", r.column_sum_checks},
          {"holds", r.holds()},
          {"counterexamples", r.counterexamples},
          {"runtime_seconds", r.runtime_seconds}};
}

}  // namespace wta::theory
