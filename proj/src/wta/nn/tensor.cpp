#include "wta/nn/tensor.hpp"

#include <cmath>
#include <string>

#include "wta/error.hpp"

namespace wta::nn {

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, "tensor data length " + std::to_string(data_.size()) +
                                             " does not match shape " + std::to_string(rows_) +
                                             "x" + std::to_string(cols_));
}

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    require(row.size() == c, "ragged rows in Tensor2::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor2(r, c, std::move(data));
}

Tensor2 Tensor2::row_vector(std::span<const double> values) {
  return Tensor2(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Tensor2::fill(double value) {
  for (double& v : data_) v = value;
}

bool Tensor2::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor2 Tensor2::gather_rows(std::span<const std::size_t> indices) const {
  Tensor2 out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < rows_, "row index out of range");
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Tensor2 Tensor2::transposed() const {
  Tensor2 out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

namespace {
void shape_error(const char* op, const Tensor2& a, const Tensor2& b) {
  fail(ErrorCode::invalid_argument, std::string(op) + ": shape mismatch " +
                                        std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                        " vs " + std::to_string(b.rows()) + "x" +
                                        std::to_string(b.cols()));
}
}  // namespace

Tensor2 matmul_transposed(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.cols()) shape_error("matmul_transposed", a, b);
  const std::size_t n = a.rows(), m = b.rows(), k = a.cols();
  Tensor2 out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.row(i).data();
    double* orow = out.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
      const double* br = b.row(j).data();
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += ar[t] * br[t];
      orow[j] = acc;
    }
  }
  return out;
}

Tensor2 transposed_matmul(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows()) shape_error("transposed_matmul", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor2 out(k, m);
  for (std::size_t s = 0; s < n; ++s) {
    const double* ar = a.row(s).data();
    const double* br = b.row(s).data();
    for (std::size_t i = 0; i < k; ++i) {
      const double av = ar[i];
      if (av == 0.0) continue;
      double* orow = out.row(i).data();
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * br[j];
    }
  }
  return out;
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor2 out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.row(i).data();
    double* orow = out.row(i).data();
    for (std::size_t t = 0; t < k; ++t) {
      const double av = ar[t];
      if (av == 0.0) continue;
      const double* br = b.row(t).data();
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * br[j];
    }
  }
  return out;
}

}  // namespace wta::nn
