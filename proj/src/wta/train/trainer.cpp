#include "wta/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "wta/error.hpp"
#include "wta/nn/ops.hpp"
#include "wta/nn/rng.hpp"
#include "wta/train/metrics.hpp"

namespace wta::train {

using nn::Tensor2;

void TrainConfig::validate() const {
  require(batch_size > 0, "batch size must be positive");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(eta_min >= 0.0 && eta_min <= learning_rate, "eta_min must lie in [0, learning rate]");
  require(t_max > 0, "T_max must be positive");
  require(l1_readout >= 0.0, "l1 coefficient must be non-negative");
  require(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 &&
              optimizer.beta2 < 1.0,
          "Adam betas must lie in [0,1)");
  require(optimizer.weight_decay >= 0.0, "weight decay must be non-negative");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"eta_min", c.eta_min},
          {"t_max", c.t_max},
          {"beta1", c.optimizer.beta1},
          {"beta2", c.optimizer.beta2},
          {"adam_eps", c.optimizer.eps},
          {"weight_decay", c.optimizer.weight_decay},
          {"l1_readout", c.l1_readout},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.eta_min = j.value("eta_min", c.eta_min);
  c.t_max = j.value("t_max", c.t_max);
  c.optimizer.beta1 = j.value("beta1", c.optimizer.beta1);
  c.optimizer.beta2 = j.value("beta2", c.optimizer.beta2);
  c.optimizer.eps = j.value("adam_eps", c.optimizer.eps);
  c.optimizer.weight_decay = j.value("weight_decay", c.optimizer.weight_decay);
  c.l1_readout = j.value("l1_readout", c.l1_readout);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (unsigned char ch : j.dump()) h = nn::mix64(h ^ ch);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json to_json(const RunRecord& r) {
  auto aucs = nlohmann::json::array();
  for (const auto& a : r.test_auc) aucs.push_back(a ? nlohmann::json(*a) : nlohmann::json(nullptr));
  return {{"epochs_run", r.epoch_loss.size()},
          {"final_train_loss", r.epoch_loss.empty() ? nlohmann::json(nullptr)
                                                    : nlohmann::json(r.epoch_loss.back())},
          {"test_mae", r.test_mae},
          {"test_auc", aucs},
          {"config_hash", r.config_hash},
          {"seed", r.seed}};
}

void write_loss_csv(const std::filesystem::path& path, const RunRecord& r) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string());
  out << "epoch,loss\n";
  char buf[40];
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%.17g", r.epoch_loss[e]);
    out << e << ',' << buf << '\n';
  }
  if (!out) fail(ErrorCode::io, "write failed on " + path.string());
}

double penalized_loss(double bce, const Tensor2& readout, double l1) {
  if (l1 == 0.0) return bce;
  double s = 0.0;
  for (double w : readout.values()) s += std::abs(w);
  return bce + l1 * s;
}

RunRecord train(model::WtaPredictor& model, const TrainData& data, const TrainConfig& config,
                const EpochCallback& on_epoch) {
  config.validate();
  require(data.x_train.rows() == data.t_train.rows(), "train inputs and targets differ in length");
  require(data.x_test.rows() == data.t_test.rows(), "test inputs and targets differ in length");
  require(data.t_train.cols() == model.tasks(), "target width does not match the task count");
  require(data.x_train.rows() > 0, "empty training set");

  const auto started = std::chrono::steady_clock::now();
  RunRecord record;
  record.seed = config.seed;
  record.config_hash = config_hash(nlohmann::json{{"train", to_json(config)},
                                                  {"predictor", model::to_json(model.config())}});

  nn::Rng rng = nn::Rng(config.seed).split(0x747261696e);  // "train"
  nn::AdamW optimizer(config.optimizer);
  const auto lr_schedule = nn::Schedule::cosine(config.learning_rate, config.eta_min, config.t_max);
  auto params = model.parameters();
  const std::size_t n = data.x_train.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_schedule.value(epoch);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n - start);
      std::span<const std::size_t> idx(order.data() + start, len);
      Tensor2 xb = data.x_train.gather_rows(idx);
      Tensor2 tb = data.t_train.gather_rows(idx);

      auto trace = model.forward(xb, model::WtaMode::train, epoch, &rng);
      auto loss = nn::bce_with_logits(trace.logits, tb);
      const double total = penalized_loss(loss.loss, model.readout().value, config.l1_readout);
      if (!std::isfinite(total))
        fail(ErrorCode::diverged, "non-finite training loss at epoch " + std::to_string(epoch));
      epoch_loss += total * static_cast<double>(len);

      model.zero_grad();
      model.backward(trace, loss.grad);
      if (config.l1_readout > 0.0) {
        auto w = model.readout().value.values();
        auto g = model.readout().grad.values();
        for (std::size_t i = 0; i < w.size(); ++i)
          g[i] += config.l1_readout * (w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0));
      }
      optimizer.step(params, lr);
    }
    epoch_loss /= static_cast<double>(n);
    record.epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }

  if (data.x_test.rows() > 0) {
    Tensor2 y = model.predict(data.x_test);
    record.test_mae = mae(y, data.t_test);
    for (std::size_t t = 0; t < model.tasks(); ++t) record.test_auc.push_back(task_auc(y, data.t_test, t));
  }
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

}  // namespace wta::train
