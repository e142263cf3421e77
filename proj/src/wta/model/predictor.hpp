#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wta/nn/layers.hpp"
#include "wta/nn/rng.hpp"
#include "wta/nn/tensor.hpp"

namespace wta::model {

struct WtaHeadConfig {
  std::vector<std::size_t> sizes;  // outputs per head
  double tau = 1.0;                // Gumbel-softmax temperature at epoch 0
  double tau_decay = 1.0;          // per-epoch multiplicative decay
  bool noise = true;

  std::size_t total() const;
  std::size_t offset(std::size_t head) const;
  std::size_t head_of(std::size_t unit) const;
  double temperature(std::size_t epoch) const;
  void validate() const;
};

struct PredictorConfig {
  std::vector<std::size_t> encoder_dims;  // input, hidden..., code width (= sum of head sizes)
  WtaHeadConfig heads;
  std::size_t tasks = 1;
  double slope = nn::kDefaultLeakySlope;
  double layernorm_eps = 1e-5;

  void validate() const;
};

nlohmann::json to_json(const PredictorConfig& c);
PredictorConfig predictor_config_from_json(const nlohmann::json& j);

// How the WTA bottleneck behaves during a forward pass.
enum class WtaMode {
  train,    // hard one-hot of argmax(a + Gumbel) forward, softmax gradients backward
  eval,     // noiseless hard argmax of a, no gradients
  relaxed,  // soft distribution passed downstream; used to check gradients
};

struct GumbelSample {
  std::vector<double> hard;  // one-hot at argmax of soft, lowest index wins ties
  std::vector<double> soft;  // softmax((a + g) / tau)
};

inline constexpr double kGumbelClamp = 1e-12;

GumbelSample gumbel_st_forward(std::span<const double> logits, double tau, nn::Rng* rng, bool noise);
// Straight-through gradient: the upstream gradient w.r.t. the hard output is
// pushed through the softmax Jacobian at the sampled point, scaled by 1/tau.
std::vector<double> gumbel_st_backward(std::span<const double> upstream,
                                       std::span<const double> soft, double tau);

// Index of the largest entry; lowest index on ties.
std::size_t argmax(std::span<const double> v);

struct ForwardTrace {
  WtaMode mode = WtaMode::eval;
  double tau = 1.0;
  nn::Tensor2 a;       // pre-WTA activations
  nn::Tensor2 soft;    // per-head tempered distributions
  nn::Tensor2 hard;    // per-head one-hots (z-hat)
  nn::Tensor2 logits;  // readout activations W_out z-hat
  nn::Tensor2 y;       // sigmoid(logits)

  // The representation the readout consumed.
  const nn::Tensor2& code() const { return mode == WtaMode::relaxed ? soft : hard; }
};

class WtaPredictor {
 public:
  WtaPredictor(PredictorConfig config, std::uint64_t seed);

  const PredictorConfig& config() const noexcept { return config_; }
  std::size_t input_dim() const noexcept { return config_.encoder_dims.front(); }
  std::size_t code_dim() const noexcept { return config_.heads.total(); }
  std::size_t tasks() const noexcept { return config_.tasks; }

  // Train and relaxed modes cache activations for backward(); `rng` is only
  // needed when Gumbel noise is on in train mode.
  ForwardTrace forward(const nn::Tensor2& x, WtaMode mode, std::size_t epoch, nn::Rng* rng);
  // Accumulates parameter gradients for d loss / d logits.
  void backward(const ForwardTrace& trace, const nn::Tensor2& grad_logits);

  // Eval-mode passes that leave the model untouched.
  nn::Tensor2 activations(const nn::Tensor2& x) const;
  nn::Tensor2 encode(const nn::Tensor2& x) const;
  ForwardTrace evaluate(const nn::Tensor2& x) const;
  nn::Tensor2 predict(const nn::Tensor2& x) const { return evaluate(x).y; }

  std::vector<nn::Parameter*> parameters();
  void zero_grad();
  nn::Parameter& readout() { return readout_; }
  const nn::Parameter& readout() const { return readout_; }
  nn::Sequential& encoder() { return encoder_; }

 private:
  ForwardTrace finish(nn::Tensor2 a, WtaMode mode, double tau, nn::Rng* rng) const;

  PredictorConfig config_;
  nn::Sequential encoder_;
  nn::Parameter readout_;  // tasks x code_dim, no bias
};

// Versioned binary checkpoint: magic, version, JSON header (predictor
// config plus caller metadata), then every parameter as name/shape/values.
void write_checkpoint(const std::filesystem::path& path, WtaPredictor& model,
                      const nlohmann::json& metadata);
struct Checkpoint {
  WtaPredictor model;
  nlohmann::json metadata;
};
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace wta::model
