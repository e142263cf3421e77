#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wta/nn/layers.hpp"

namespace wta::nn {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Decoupled weight decay Adam with bias correction. Moment buffers are
// allocated lazily to match the parameter list on the first step; the same
// parameters must be passed in the same order afterwards.
class AdamW {
 public:
  explicit AdamW(AdamWOptions options = {}) : options_(options) {}

  void step(std::span<Parameter* const> params, double learning_rate);

  std::size_t steps() const { return step_; }
  const AdamWOptions& options() const { return options_; }
  const std::vector<Tensor2>& first_moments() const { return m_; }
  const std::vector<Tensor2>& second_moments() const { return v_; }

 private:
  AdamWOptions options_;
  std::size_t step_ = 0;
  std::vector<Tensor2> m_;
  std::vector<Tensor2> v_;
};

struct Schedule {
  enum class Kind { cosine_annealing, exponential_decay };

  Kind kind = Kind::cosine_annealing;
  double base = 1.0;
  double eta_min = 0.0;     // cosine only
  std::size_t t_max = 1;    // cosine only
  double decay = 1.0;       // exponential only

  static Schedule cosine(double base, double eta_min, std::size_t t_max) {
    return {Kind::cosine_annealing, base, eta_min, t_max, 1.0};
  }
  static Schedule exponential(double base, double decay) {
    return {Kind::exponential_decay, base, 0.0, 1, decay};
  }

  double value(std::size_t epoch) const;
};

}  // namespace wta::nn
