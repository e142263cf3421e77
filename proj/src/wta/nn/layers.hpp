#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wta/nn/ops.hpp"
#include "wta/nn/rng.hpp"
#include "wta/nn/tensor.hpp"

namespace wta::nn {

struct Parameter {
  std::string name;
  Tensor2 value;
  Tensor2 grad;

  Parameter() = default;
  Parameter(std::string n, Tensor2 v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void zero_grad() { grad.fill(0.0); }
};

enum class Mode { train, eval };

struct ForwardContext {
  Mode mode = Mode::eval;
  Rng* rng = nullptr;  // required only by stochastic layers in train mode
};

inline constexpr double kDefaultLeakySlope = 0.01;

class Linear {
 public:
  Linear(std::size_t in, std::size_t out, bool bias, Rng& rng, std::string name = "linear");
  Linear(Tensor2 weights, std::optional<std::vector<double>> bias, std::string name = "linear");

  Tensor2 forward(const Tensor2& input, const ForwardContext& ctx);
  Tensor2 infer(const Tensor2& input) const;
  Tensor2 backward(const Tensor2& grad_output, bool need_input = true);
  void collect(std::vector<Parameter*>& out);

  const Tensor2& weights() const { return weights_.value; }
  Tensor2& weights() { return weights_.value; }
  bool has_bias() const { return bias_.has_value(); }
  std::span<const double> bias() const {
    return bias_ ? bias_->value.values() : std::span<const double>{};
  }
  std::size_t in_features() const { return weights_.value.cols(); }
  std::size_t out_features() const { return weights_.value.rows(); }

 private:
  Parameter weights_;
  std::optional<Parameter> bias_;
  Tensor2 input_;
};

class LeakyRelu {
 public:
  explicit LeakyRelu(double slope = kDefaultLeakySlope) : slope_(slope) {}
  Tensor2 forward(const Tensor2& input, const ForwardContext& ctx);
  Tensor2 infer(const Tensor2& input) const { return leaky_relu(input, slope_); }
  Tensor2 backward(const Tensor2& grad_output);
  void collect(std::vector<Parameter*>&) {}
  double slope() const { return slope_; }

 private:
  double slope_;
  Tensor2 input_;
};

class LayerNorm {
 public:
  explicit LayerNorm(std::size_t features, double eps = 1e-5, std::string name = "layernorm");
  Tensor2 forward(const Tensor2& input, const ForwardContext& ctx);
  Tensor2 infer(const Tensor2& input) const;
  Tensor2 backward(const Tensor2& grad_output);
  void collect(std::vector<Parameter*>& out);
  double eps() const { return eps_; }
  std::size_t features() const { return gain_.value.cols(); }

 private:
  Parameter gain_;
  Parameter offset_;
  double eps_;
  LayerNormState state_;
};

// Inverted dropout: identity in eval mode, scaled Bernoulli mask in train mode.
class Dropout {
 public:
  explicit Dropout(double rate) : rate_(rate) {}
  Tensor2 forward(const Tensor2& input, const ForwardContext& ctx);
  Tensor2 infer(const Tensor2& input) const { return input; }
  Tensor2 backward(const Tensor2& grad_output);
  void collect(std::vector<Parameter*>&) {}
  double rate() const { return rate_; }

 private:
  double rate_;
  Tensor2 mask_;
};

using Layer = std::variant<Linear, LeakyRelu, LayerNorm, Dropout>;

// Fixed sequential stack. Backward replays the cached forward state in
// reverse, so every forward in train mode must be followed by at most one
// backward before the next forward.
class Sequential {
 public:
  Sequential() = default;
  void push(Layer layer) { layers_.push_back(std::move(layer)); }

  Tensor2 forward(const Tensor2& input, const ForwardContext& ctx);
  // Eval-mode forward that touches no cached state; safe to share across threads.
  Tensor2 infer(const Tensor2& input) const;
  // With `need_input = false` the returned gradient is empty.
  Tensor2 backward(const Tensor2& grad_output, bool need_input = true);
  std::vector<Parameter*> parameters();

  std::size_t size() const { return layers_.size(); }
  Layer& operator[](std::size_t i) { return layers_[i]; }
  const Layer& operator[](std::size_t i) const { return layers_[i]; }

 private:
  std::vector<Layer> layers_;
};

}  // namespace wta::nn
