#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wta/model/predictor.hpp"
#include "wta/nn/optim.hpp"
#include "wta/nn/tensor.hpp"

namespace wta::train {

struct TrainConfig {
  std::size_t epochs = 1000;
  std::size_t batch_size = 256;
  double learning_rate = 0.008;
  double eta_min = 1e-6;
  std::size_t t_max = 1000;
  nn::AdamWOptions optimizer{};
  double l1_readout = 0.0;  // coefficient of sum |W_out| added to the loss
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
// Stable hex digest of the serialized config.
std::string config_hash(const nlohmann::json& j);

struct RunRecord {
  std::vector<double> epoch_loss;
  double test_mae = 0.0;
  std::vector<std::optional<double>> test_auc;  // per task; empty when a task has one class
  double wall_seconds = 0.0;
  std::string config_hash;
  std::uint64_t seed = 0;
};

// Everything except wall time, so repeated runs serialize identically.
nlohmann::json to_json(const RunRecord& r);
void write_loss_csv(const std::filesystem::path& path, const RunRecord& r);

struct TrainData {
  const nn::Tensor2& x_train;
  const nn::Tensor2& t_train;
  const nn::Tensor2& x_test;
  const nn::Tensor2& t_test;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Mini-batch BCE training with AdamW, cosine-annealed learning rate and
// per-epoch temperature decay; evaluates the test split in eval mode at the end.
RunRecord train(model::WtaPredictor& model, const TrainData& data, const TrainConfig& config,
                const EpochCallback& on_epoch = {});

// Loss of one batch including the readout penalty; exposed for tests.
double penalized_loss(double bce, const nn::Tensor2& readout, double l1);

}  // namespace wta::train
