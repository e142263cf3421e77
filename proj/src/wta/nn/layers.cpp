#include "wta/nn/layers.hpp"

#include <cmath>
#include <iterator>
#include <type_traits>

#include "wta/error.hpp"

namespace wta::nn {

Linear::Linear(std::size_t in, std::size_t out, bool bias, Rng& rng, std::string name) {
  require(in > 0 && out > 0, "linear layer dimensions must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor2 w(out, in);
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  weights_ = Parameter(name + ".weight", std::move(w));
  if (bias) {
    Tensor2 b(1, out);
    for (double& v : b.values()) v = rng.uniform(-bound, bound);
    bias_ = Parameter(name + ".bias", std::move(b));
  }
}

Linear::Linear(Tensor2 weights, std::optional<std::vector<double>> bias, std::string name) {
  if (bias) require(bias->size() == weights.rows(), "linear: bias length mismatch");
  weights_ = Parameter(name + ".weight", std::move(weights));
  if (bias) bias_ = Parameter(name + ".bias", Tensor2::row_vector(*bias));
}

Tensor2 Linear::forward(const Tensor2& input, const ForwardContext& ctx) {
  if (ctx.mode == Mode::train) input_ = input;
  return linear_forward(input, weights_.value, bias());
}

Tensor2 Linear::infer(const Tensor2& input) const {
  return linear_forward(input, weights_.value, bias());
}

Tensor2 Linear::backward(const Tensor2& grad_output, bool need_input) {
  auto g = linear_backward(input_, weights_.value, grad_output, bias_.has_value(), need_input);
  auto gw = weights_.grad.values();
  auto src = g.weights.values();
  for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += src[i];
  if (bias_) {
    auto gb = bias_->grad.values();
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g.bias[i];
  }
  return std::move(g.input);
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&weights_);
  if (bias_) out.push_back(&*bias_);
}

Tensor2 LeakyRelu::forward(const Tensor2& input, const ForwardContext& ctx) {
  if (ctx.mode == Mode::train) input_ = input;
  return leaky_relu(input, slope_);
}

Tensor2 LeakyRelu::backward(const Tensor2& grad_output) {
  return leaky_relu_backward(input_, grad_output, slope_);
}

LayerNorm::LayerNorm(std::size_t features, double eps, std::string name)
    : gain_(name + ".gain", Tensor2(1, features, 1.0)),
      offset_(name + ".offset", Tensor2(1, features, 0.0)),
      eps_(eps) {}

Tensor2 LayerNorm::forward(const Tensor2& input, const ForwardContext& ctx) {
  auto s = layer_norm_forward(input, gain_.value.values(), offset_.value.values(), eps_);
  Tensor2 out = s.output;
  if (ctx.mode == Mode::train) state_ = std::move(s);
  return out;
}

Tensor2 LayerNorm::infer(const Tensor2& input) const {
  return layer_norm_forward(input, gain_.value.values(), offset_.value.values(), eps_).output;
}

Tensor2 LayerNorm::backward(const Tensor2& grad_output) {
  auto g = layer_norm_backward(state_, gain_.value.values(), grad_output);
  auto gg = gain_.grad.values();
  auto go = offset_.grad.values();
  for (std::size_t i = 0; i < gg.size(); ++i) {
    gg[i] += g.gain[i];
    go[i] += g.offset[i];
  }
  return std::move(g.input);
}

void LayerNorm::collect(std::vector<Parameter*>& out) {
  out.push_back(&gain_);
  out.push_back(&offset_);
}

Tensor2 Dropout::forward(const Tensor2& input, const ForwardContext& ctx) {
  if (ctx.mode != Mode::train || rate_ <= 0.0) {
    mask_ = Tensor2();
    return input;
  }
  require(ctx.rng != nullptr, "dropout in train mode needs an rng");
  const double keep = 1.0 - rate_;
  mask_ = Tensor2(input.rows(), input.cols());
  Tensor2 out = input;
  auto m = mask_.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    m[i] = ctx.rng->uniform() < keep ? 1.0 / keep : 0.0;
    o[i] *= m[i];
  }
  return out;
}

Tensor2 Dropout::backward(const Tensor2& grad_output) {
  if (mask_.empty()) return grad_output;
  Tensor2 out = grad_output;
  auto m = mask_.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= m[i];
  return out;
}

Tensor2 Sequential::forward(const Tensor2& input, const ForwardContext& ctx) {
  Tensor2 h = input;
  for (auto& layer : layers_) h = std::visit([&](auto& l) { return l.forward(h, ctx); }, layer);
  return h;
}

Tensor2 Sequential::infer(const Tensor2& input) const {
  Tensor2 h = input;
  for (const auto& layer : layers_) h = std::visit([&](const auto& l) { return l.infer(h); }, layer);
  return h;
}

Tensor2 Sequential::backward(const Tensor2& grad_output, bool need_input) {
  Tensor2 g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    const bool first = std::next(it) == layers_.rend();
    g = std::visit(
        [&](auto& l) {
          if constexpr (std::is_same_v<std::decay_t<decltype(l)>, Linear>)
            return l.backward(g, need_input || !first);
          else
            return l.backward(g);
        },
        *it);
  }
  return g;
}

std::vector<Parameter*> Sequential::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) std::visit([&](auto& l) { l.collect(out); }, layer);
  return out;
}

}  // namespace wta::nn
