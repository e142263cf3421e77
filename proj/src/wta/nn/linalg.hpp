#pragma once

#include <cstddef>

#include "wta/nn/tensor.hpp"

namespace wta::nn {

// Rank by Gaussian elimination with full pivoting; a pivot whose magnitude
// falls below `tol` ends the elimination.
std::size_t matrix_rank(const Tensor2& a, double tol = 1e-8);

struct LeastSquaresResult {
  Tensor2 solution;      // X minimizing ||A X - B||_F; free directions set to zero
  double residual = 0.0; // ||A X - B||_F
  std::size_t rank = 0;  // rank of A^T A found during elimination
};

// Solves the normal equations A^T A X = A^T B with full pivoting. Rank
// deficient systems are consistent by construction, so any pivot below
// `pivot_tol` marks a free variable that is pinned to zero.
LeastSquaresResult least_squares(const Tensor2& a, const Tensor2& b, double pivot_tol = 1e-10);

double frobenius_distance(const Tensor2& a, const Tensor2& b);

}  // namespace wta::nn
