#include "wta/nn/linalg.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "wta/error.hpp"

namespace wta::nn {

namespace {

// In-place full-pivot elimination of `a` (n x n) with right-hand sides `b`
// (n x k). Returns the rank and leaves a permuted upper-triangular system;
// `col_perm[i]` is the unknown eliminated at step i.
std::size_t eliminate(Tensor2& a, Tensor2* b, std::vector<std::size_t>& col_perm, double tol) {
  const std::size_t rows = a.rows(), cols = a.cols();
  col_perm.resize(cols);
  std::iota(col_perm.begin(), col_perm.end(), 0);
  std::size_t rank = 0;
  for (; rank < std::min(rows, cols); ++rank) {
    std::size_t pr = rank, pc = rank;
    double best = 0.0;
    for (std::size_t r = rank; r < rows; ++r)
      for (std::size_t c = rank; c < cols; ++c)
        if (std::abs(a(r, c)) > best) {
          best = std::abs(a(r, c));
          pr = r;
          pc = c;
        }
    if (best < tol) break;
    if (pr != rank) {
      for (std::size_t c = 0; c < cols; ++c) std::swap(a(pr, c), a(rank, c));
      if (b)
        for (std::size_t c = 0; c < b->cols(); ++c) std::swap((*b)(pr, c), (*b)(rank, c));
    }
    if (pc != rank) {
      for (std::size_t r = 0; r < rows; ++r) std::swap(a(r, pc), a(r, rank));
      std::swap(col_perm[pc], col_perm[rank]);
    }
    const double pivot = a(rank, rank);
    for (std::size_t r = rank + 1; r < rows; ++r) {
      const double f = a(r, rank) / pivot;
      if (f == 0.0) continue;
      for (std::size_t c = rank; c < cols; ++c) a(r, c) -= f * a(rank, c);
      if (b)
        for (std::size_t c = 0; c < b->cols(); ++c) (*b)(r, c) -= f * (*b)(rank, c);
    }
  }
  return rank;
}

}  // namespace

std::size_t matrix_rank(const Tensor2& a, double tol) {
  Tensor2 work = a;
  std::vector<std::size_t> perm;
  return eliminate(work, nullptr, perm, tol);
}

LeastSquaresResult least_squares(const Tensor2& a, const Tensor2& b, double pivot_tol) {
  require(a.rows() == b.rows(), "least_squares: row count mismatch");
  Tensor2 normal = transposed_matmul(a, a);
  Tensor2 rhs = transposed_matmul(a, b);
  std::vector<std::size_t> perm;
  const std::size_t rank = eliminate(normal, &rhs, perm, pivot_tol);

  const std::size_t n = a.cols();
  Tensor2 x(n, b.cols());
  for (std::size_t k = 0; k < b.cols(); ++k) {
    std::vector<double> y(n, 0.0);  // in pivoted unknown order
    for (std::size_t i = rank; i-- > 0;) {
      double s = rhs(i, k);
      for (std::size_t j = i + 1; j < rank; ++j) s -= normal(i, j) * y[j];
      y[i] = s / normal(i, i);
    }
    for (std::size_t i = 0; i < n; ++i) x(perm[i], k) = y[i];
  }
  LeastSquaresResult res;
  res.residual = frobenius_distance(matmul(a, x), b);
  res.solution = std::move(x);
  res.rank = rank;
  return res;
}

double frobenius_distance(const Tensor2& a, const Tensor2& b) {
  require(a.same_shape(b), "frobenius_distance: shape mismatch");
  double s = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

}  // namespace wta::nn
