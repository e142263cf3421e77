#pragma once

#include <span>
#include <vector>

#include "wta/nn/tensor.hpp"

namespace wta::nn {

// Pure tensor operations with their hand-written adjoints. Layers in
// layers.hpp wrap these and cache the forward state the adjoints need.

Tensor2 linear_forward(const Tensor2& input, const Tensor2& weights,
                       std::span<const double> bias = {});

struct LinearGrads {
  Tensor2 input;
  Tensor2 weights;
  std::vector<double> bias;  // empty when the layer has no bias
};
// `need_input = false` skips the input gradient (first layer of a network).
LinearGrads linear_backward(const Tensor2& input, const Tensor2& weights,
                            const Tensor2& grad_output, bool has_bias, bool need_input = true);

Tensor2 leaky_relu(const Tensor2& input, double slope);
Tensor2 leaky_relu_backward(const Tensor2& input, const Tensor2& grad_output, double slope);

struct LayerNormState {
  Tensor2 output;
  Tensor2 normalized;              // (x - mean) / sqrt(var + eps), before the affine map
  std::vector<double> inv_stddev;  // per row
};
LayerNormState layer_norm_forward(const Tensor2& input, std::span<const double> gain,
                                  std::span<const double> offset, double eps);

struct LayerNormGrads {
  Tensor2 input;
  std::vector<double> gain;
  std::vector<double> offset;
};
LayerNormGrads layer_norm_backward(const LayerNormState& state, std::span<const double> gain,
                                   const Tensor2& grad_output);

double sigmoid(double x) noexcept;
Tensor2 sigmoid(const Tensor2& input);
// Gradient through the sigmoid given its output y.
Tensor2 sigmoid_backward(const Tensor2& output, const Tensor2& grad_output);

inline constexpr double kBceClamp = 1e-12;

struct LossResult {
  double loss = 0.0;
  Tensor2 grad;  // d loss / d input of the loss (predictions or logits)
};

// Mean binary cross entropy over every entry; predictions are clamped to
// [kBceClamp, 1 - kBceClamp] before the logarithm.
LossResult bce_loss(const Tensor2& predictions, const Tensor2& targets);
// Same loss evaluated on pre-sigmoid logits in the overflow-free form.
LossResult bce_with_logits(const Tensor2& logits, const Tensor2& targets);

// Entropy of a Bernoulli(t), the minimum of the per-entry loss.
double binary_entropy(double t) noexcept;

}  // namespace wta::nn
