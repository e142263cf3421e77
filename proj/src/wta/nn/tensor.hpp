#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace wta::nn {

// Dense row-major matrix of doubles. Rows are samples, columns features.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor2 row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  void fill(double value);
  bool all_finite() const noexcept;
  bool same_shape(const Tensor2& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  // Rows selected by index, in the given order.
  Tensor2 gather_rows(std::span<const std::size_t> indices) const;
  Tensor2 transposed() const;

  friend bool operator==(const Tensor2&, const Tensor2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out = a * b^T, with a [n x k] and b [m x k].
Tensor2 matmul_transposed(const Tensor2& a, const Tensor2& b);
// out = a^T * b, with a [n x k] and b [n x m]; used for weight gradients.
Tensor2 transposed_matmul(const Tensor2& a, const Tensor2& b);
// out = a * b, with a [n x k] and b [k x m].
Tensor2 matmul(const Tensor2& a, const Tensor2& b);

}  // namespace wta::nn
