#include "wta/generalization/readout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wta/error.hpp"
#include "wta/nn/ops.hpp"
#include "wta/nn/optim.hpp"

namespace wta::generalization {

using nn::Tensor2;

void ReadoutConfig::validate() const {
  require(hidden_dim > 0 && hidden_layers > 0, "readout needs at least one non-empty hidden layer");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0,1)");
  require(learning_rate > 0.0 && weight_decay >= 0.0, "invalid readout optimizer settings");
  require(batch_size > 0, "batch size must be positive");
}

nlohmann::json to_json(const ReadoutConfig& c) {
  return {{"hidden_dim", c.hidden_dim},       {"hidden_layers", c.hidden_layers},
          {"dropout", c.dropout},             {"layernorm", c.layernorm},
          {"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size}};
}

ReadoutMlp::ReadoutMlp(std::size_t inputs, const ReadoutConfig& config, std::uint64_t seed) : config_(config) {
  config.validate();
  require(inputs > 0, "readout input width must be positive");
  nn::Rng rng = nn::Rng(seed).split(0x726561646f7574);  // "readout"
  if (config.layernorm) net_.push(nn::LayerNorm(inputs, 1e-5, "input_norm"));
  std::size_t width = inputs;
  for (std::size_t i = 0; i < config.hidden_layers; ++i) {
    net_.push(nn::Linear(width, config.hidden_dim, true, rng, "hidden" + std::to_string(i)));
    net_.push(nn::LeakyRelu());
    if (config.dropout > 0.0) net_.push(nn::Dropout(config.dropout));
    width = config.hidden_dim;
  }
  net_.push(nn::Linear(width, 1, true, rng, "output"));
}

Tensor2 ReadoutMlp::logits(const Tensor2& x, nn::Mode mode, nn::Rng* rng) {
  return mode == nn::Mode::eval ? net_.infer(x) : net_.forward(x, {mode, rng});
}

Tensor2 ReadoutMlp::predict(const Tensor2& x) const { return nn::sigmoid(net_.infer(x)); }

FitResult fit_readout(ReadoutMlp& model, const Tensor2& x_train, const Tensor2& t_train, const Tensor2& x_val,
                      const Tensor2& t_val, const FitOptions& options, nn::Rng& rng) {
  require(x_train.rows() == t_train.rows() && x_val.rows() == t_val.rows(), "inputs and targets differ in length");
  require(x_train.rows() > 0 && x_val.rows() > 0, "readout training needs train and validation samples");
  require(options.max_epochs > 0, "max epochs must be positive");

  const auto& cfg = model.config();
  nn::AdamW optimizer({0.9, 0.999, 1e-8, cfg.weight_decay});
  auto params = model.parameters();
  std::vector<Tensor2> best(params.size());
  auto snapshot = [&] {
    for (std::size_t i = 0; i < params.size(); ++i) best[i] = params[i]->value;
  };

  const std::size_t n = x_train.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  FitResult result;
  result.best_val_loss = INFINITY;
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < options.max_epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      std::span<const std::size_t> idx(order.data() + start, std::min(cfg.batch_size, n - start));
      const Tensor2 xb = x_train.gather_rows(idx), tb = t_train.gather_rows(idx);
      const auto loss = nn::bce_with_logits(model.logits(xb, nn::Mode::train, &rng), tb);
      if (!std::isfinite(loss.loss)) fail(ErrorCode::diverged, "readout training diverged");
      for (auto* p : params) p->zero_grad();
      model.backward(loss.grad);
      optimizer.step(params, cfg.learning_rate);
    }
    result.epochs_run = epoch + 1;
    const double val = nn::bce_with_logits(model.logits(x_val, nn::Mode::eval, nullptr), t_val).loss;
    if (val < result.best_val_loss) {
      result.best_val_loss = val;
      result.best_epoch = epoch;
      stale = 0;
      snapshot();
    } else if (++stale >= options.patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  return result;
}

}  // namespace wta::generalization
