#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

#include "wta/nn/layers.hpp"
#include "wta/nn/rng.hpp"
#include "wta/nn/tensor.hpp"

namespace wta::generalization {

struct ReadoutConfig {
  std::size_t hidden_dim = 64;
  std::size_t hidden_layers = 2;
  double dropout = 0.0;
  bool layernorm = false;  // on the input
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  std::size_t batch_size = 32;

  void validate() const;
};

nlohmann::json to_json(const ReadoutConfig& c);

// Downstream classifier: [LayerNorm] -> (Linear, LeakyReLU, [Dropout]) x L -> Linear(1).
class ReadoutMlp {
 public:
  ReadoutMlp(std::size_t inputs, const ReadoutConfig& config, std::uint64_t seed);

  nn::Tensor2 logits(const nn::Tensor2& x, nn::Mode mode, nn::Rng* rng);
  nn::Tensor2 backward(const nn::Tensor2& grad_logits) { return net_.backward(grad_logits, false); }
  // Probabilities in eval mode, N x 1.
  nn::Tensor2 predict(const nn::Tensor2& x) const;
  std::vector<nn::Parameter*> parameters() { return net_.parameters(); }
  const ReadoutConfig& config() const { return config_; }

 private:
  ReadoutConfig config_;
  nn::Sequential net_;
};

struct FitOptions {
  std::size_t max_epochs = 500;
  std::size_t patience = 10;  // epochs without validation improvement before stopping
};

struct FitResult {
  double best_val_loss = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

// Mini-batch BCE on (possibly soft) targets with AdamW at a constant rate.
// Stops after `patience` epochs without a lower validation loss and restores
// the weights of the best epoch.
FitResult fit_readout(ReadoutMlp& model, const nn::Tensor2& x_train, const nn::Tensor2& t_train,
                      const nn::Tensor2& x_val, const nn::Tensor2& t_val, const FitOptions& options,
                      nn::Rng& rng);

}  // namespace wta::generalization
