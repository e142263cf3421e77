#include "wta/nn/optim.hpp"

#include <cmath>
#include <numbers>

#include "wta/error.hpp"

namespace wta::nn {

void AdamW::step(std::span<Parameter* const> params, double learning_rate) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.rows(), p->value.cols());
      v_.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  require(m_.size() == params.size(), "AdamW: parameter list changed between steps");
  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double decay = 1.0 - learning_rate * options_.weight_decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    require(p.value.same_shape(m_[k]), "AdamW: parameter shape changed between steps");
    auto w = p.value.values();
    auto g = p.grad.values();
    auto m = m_[k].values();
    auto v = v_[k].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] *= decay;
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= learning_rate * mhat / (std::sqrt(vhat) + options_.eps);
    }
  }
}

double Schedule::value(std::size_t epoch) const {
  switch (kind) {
    case Kind::cosine_annealing: {
      const double phase = std::numbers::pi * static_cast<double>(epoch) /
                           static_cast<double>(t_max == 0 ? 1 : t_max);
      return eta_min + (base - eta_min) * (1.0 + std::cos(phase)) / 2.0;
    }
    case Kind::exponential_decay:
      return base * std::pow(decay, static_cast<double>(epoch));
  }
  return base;
}

}  // namespace wta::nn
