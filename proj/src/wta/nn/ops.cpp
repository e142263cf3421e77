#include "wta/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "wta/error.hpp"

namespace wta::nn {

namespace {

// Inputs such as rendered images are mostly zero. Skipping the zero terms
// leaves every sum bit-identical to the dense loops, which add them as +0.
bool is_sparse(const Tensor2& t) {
  if (t.size() < 4096) return false;
  std::size_t nonzero = 0;
  for (double v : t.values()) nonzero += v != 0.0;
  return nonzero * 8 < t.size();
}

// input [n x k] times weights^T, weights [m x k].
Tensor2 sparse_matmul_transposed(const Tensor2& input, const Tensor2& weights) {
  const std::size_t n = input.rows(), m = weights.rows(), k = input.cols();
  Tensor2 out(n, m);
  std::vector<std::size_t> nz;
  for (std::size_t r = 0; r < n; ++r) {
    auto x = input.row(r);
    nz.clear();
    for (std::size_t t = 0; t < k; ++t)
      if (x[t] != 0.0) nz.push_back(t);
    auto o = out.row(r);
    for (std::size_t j = 0; j < m; ++j) {
      const double* w = weights.row(j).data();
      double acc = 0.0;
      for (auto t : nz) acc += x[t] * w[t];
      o[j] = acc;
    }
  }
  return out;
}

// grad^T * input with grad [n x m], input [n x k].
Tensor2 sparse_weight_grad(const Tensor2& grad, const Tensor2& input) {
  const std::size_t n = input.rows(), m = grad.cols(), k = input.cols();
  Tensor2 out(m, k);
  for (std::size_t r = 0; r < n; ++r) {
    auto x = input.row(r);
    auto g = grad.row(r);
    for (std::size_t t = 0; t < k; ++t) {
      if (x[t] == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j)
        if (g[j] != 0.0) out(j, t) += g[j] * x[t];
    }
  }
  return out;
}

}  // namespace

Tensor2 linear_forward(const Tensor2& input, const Tensor2& weights,
                       std::span<const double> bias) {
  require(input.cols() == weights.cols(), "linear_forward: input width " +
                                              std::to_string(input.cols()) +
                                              " != weight fan-in " +
                                              std::to_string(weights.cols()));
  require(bias.empty() || bias.size() == weights.rows(), "linear_forward: bias length mismatch");
  Tensor2 out = is_sparse(input) ? sparse_matmul_transposed(input, weights)
                                 : matmul_transposed(input, weights);
  if (!bias.empty()) {
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
    }
  }
  return out;
}

LinearGrads linear_backward(const Tensor2& input, const Tensor2& weights,
                            const Tensor2& grad_output, bool has_bias, bool need_input) {
  require(grad_output.rows() == input.rows() && grad_output.cols() == weights.rows(),
          "linear_backward: gradient shape mismatch");
  LinearGrads g;
  if (need_input) g.input = matmul(grad_output, weights);
  g.weights = is_sparse(input) ? sparse_weight_grad(grad_output, input)
                               : transposed_matmul(grad_output, input);
  if (has_bias) {
    g.bias.assign(weights.rows(), 0.0);
    for (std::size_t r = 0; r < grad_output.rows(); ++r) {
      auto row = grad_output.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) g.bias[c] += row[c];
    }
  }
  return g;
}

Tensor2 leaky_relu(const Tensor2& input, double slope) {
  Tensor2 out = input;
  for (double& v : out.values())
    if (v < 0.0) v *= slope;
  return out;
}

Tensor2 leaky_relu_backward(const Tensor2& input, const Tensor2& grad_output, double slope) {
  require(input.same_shape(grad_output), "leaky_relu_backward: shape mismatch");
  Tensor2 out = grad_output;
  auto x = input.values();
  auto g = out.values();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (x[i] < 0.0) g[i] *= slope;
  return out;
}

LayerNormState layer_norm_forward(const Tensor2& input, std::span<const double> gain,
                                  std::span<const double> offset, double eps) {
  const std::size_t n = input.cols();
  require(gain.size() == n && offset.size() == n, "layer_norm: gain/offset length mismatch");
  LayerNormState s{Tensor2(input.rows(), n), Tensor2(input.rows(), n),
                   std::vector<double>(input.rows())};
  for (std::size_t r = 0; r < input.rows(); ++r) {
    auto x = input.row(r);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    s.inv_stddev[r] = inv;
    auto xh = s.normalized.row(r);
    auto y = s.output.row(r);
    for (std::size_t c = 0; c < n; ++c) {
      xh[c] = (x[c] - mean) * inv;
      y[c] = gain[c] * xh[c] + offset[c];
    }
  }
  return s;
}

LayerNormGrads layer_norm_backward(const LayerNormState& state, std::span<const double> gain,
                                   const Tensor2& grad_output) {
  const std::size_t n = state.normalized.cols();
  require(grad_output.same_shape(state.normalized), "layer_norm_backward: shape mismatch");
  LayerNormGrads g{Tensor2(grad_output.rows(), n), std::vector<double>(n, 0.0),
                   std::vector<double>(n, 0.0)};
  std::vector<double> dxhat(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < grad_output.rows(); ++r) {
    auto dy = grad_output.row(r);
    auto xh = state.normalized.row(r);
    double sum_d = 0.0, sum_dx = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      g.gain[c] += dy[c] * xh[c];
      g.offset[c] += dy[c];
      dxhat[c] = dy[c] * gain[c];
      sum_d += dxhat[c];
      sum_dx += dxhat[c] * xh[c];
    }
    auto dx = g.input.row(r);
    const double inv = state.inv_stddev[r];
    for (std::size_t c = 0; c < n; ++c)
      dx[c] = inv * (dxhat[c] - inv_n * sum_d - xh[c] * inv_n * sum_dx);
  }
  return g;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor2 sigmoid(const Tensor2& input) {
  Tensor2 out = input;
  for (double& v : out.values()) v = sigmoid(v);
  return out;
}

Tensor2 sigmoid_backward(const Tensor2& output, const Tensor2& grad_output) {
  require(output.same_shape(grad_output), "sigmoid_backward: shape mismatch");
  Tensor2 out = grad_output;
  auto y = output.values();
  auto g = out.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (1.0 - y[i]);
  return out;
}

LossResult bce_loss(const Tensor2& predictions, const Tensor2& targets) {
  require(predictions.same_shape(targets), "bce_loss: shape mismatch");
  LossResult res{0.0, Tensor2(predictions.rows(), predictions.cols())};
  const double scale = predictions.empty() ? 0.0 : 1.0 / static_cast<double>(predictions.size());
  auto p = predictions.values();
  auto t = targets.values();
  auto g = res.grad.values();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double y = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
    total -= t[i] * std::log(y) + (1.0 - t[i]) * std::log1p(-y);
    // The clamp is flat outside its range, so the gradient vanishes there.
    const bool clamped = p[i] < kBceClamp || p[i] > 1.0 - kBceClamp;
    g[i] = clamped ? 0.0 : scale * (y - t[i]) / (y * (1.0 - y));
  }
  res.loss = total * scale;
  return res;
}

LossResult bce_with_logits(const Tensor2& logits, const Tensor2& targets) {
  require(logits.same_shape(targets), "bce_with_logits: shape mismatch");
  LossResult res{0.0, Tensor2(logits.rows(), logits.cols())};
  const double scale = logits.empty() ? 0.0 : 1.0 / static_cast<double>(logits.size());
  auto x = logits.values();
  auto t = targets.values();
  auto g = res.grad.values();
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // -[t ln s(x) + (1-t) ln(1-s(x))] = max(x,0) - x t + ln(1 + e^{-|x|})
    total += std::max(x[i], 0.0) - x[i] * t[i] + std::log1p(std::exp(-std::abs(x[i])));
    g[i] = scale * (sigmoid(x[i]) - t[i]);
  }
  res.loss = total * scale;
  return res;
}

double binary_entropy(double t) noexcept {
  double h = 0.0;
  if (t > 0.0) h -= t * std::log(t);
  if (t < 1.0) h -= (1.0 - t) * std::log1p(-t);
  return h;
}

}  // namespace wta::nn
