#include "wta/model/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wta/binary_io.hpp"
#include "wta/error.hpp"
#include "wta/nn/ops.hpp"

namespace wta::model {

using nn::Tensor2;

std::size_t WtaHeadConfig::total() const { return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}); }

std::size_t WtaHeadConfig::offset(std::size_t head) const {
  require(head < sizes.size(), "head index out of range");
  return std::accumulate(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(head), std::size_t{0});
}

std::size_t WtaHeadConfig::head_of(std::size_t unit) const {
  std::size_t start = 0;
  for (std::size_t h = 0; h < sizes.size(); ++h) {
    if (unit < start + sizes[h]) return h;
    start += sizes[h];
  }
  fail(ErrorCode::invalid_argument, "code unit outside every head");
}

double WtaHeadConfig::temperature(std::size_t epoch) const {
  return tau * std::pow(tau_decay, static_cast<double>(epoch));
}

void WtaHeadConfig::validate() const {
  require(!sizes.empty(), "at least one WTA head is required");
  for (std::size_t s : sizes) require(s >= 2, "every WTA head needs at least 2 outputs");
  require(tau > 0.0, "Gumbel temperature must be positive");
  require(tau_decay > 0.0, "temperature decay must be positive");
}

void PredictorConfig::validate() const {
  heads.validate();
  require(encoder_dims.size() >= 2, "encoder needs an input and an output width");
  for (std::size_t d : encoder_dims) require(d > 0, "encoder widths must be positive");
  require(encoder_dims.back() == heads.total(),
          "encoder output width " + std::to_string(encoder_dims.back()) +
              " must equal the summed head sizes " + std::to_string(heads.total()));
  require(tasks > 0, "predictor needs at least one task");
  require(slope > 0.0 && slope < 1.0, "leaky slope must lie in (0,1)");
  require(layernorm_eps > 0.0, "layer norm epsilon must be positive");
}

nlohmann::json to_json(const PredictorConfig& c) {
  return {{"encoder_dims", c.encoder_dims},
          {"heads", c.heads.sizes},
          {"tau", c.heads.tau},
          {"tau_decay", c.heads.tau_decay},
          {"noise", c.heads.noise},
          {"tasks", c.tasks},
          {"slope", c.slope},
          {"layernorm_eps", c.layernorm_eps}};
}

PredictorConfig predictor_config_from_json(const nlohmann::json& j) {
  PredictorConfig c;
  c.encoder_dims = j.at("encoder_dims").get<std::vector<std::size_t>>();
  c.heads.sizes = j.at("heads").get<std::vector<std::size_t>>();
  c.heads.tau = j.at("tau").get<double>();
  c.heads.tau_decay = j.at("tau_decay").get<double>();
  c.heads.noise = j.at("noise").get<bool>();
  c.tasks = j.at("tasks").get<std::size_t>();
  c.slope = j.at("slope").get<double>();
  c.layernorm_eps = j.at("layernorm_eps").get<double>();
  return c;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

GumbelSample gumbel_st_forward(std::span<const double> logits, double tau, nn::Rng* rng, bool noise) {
  require(tau > 0.0, "Gumbel temperature must be positive");
  require(logits.size() >= 2, "WTA block needs at least 2 entries");
  const std::size_t k = logits.size();
  std::vector<double> z(logits.begin(), logits.end());
  if (noise) {
    require(rng != nullptr, "Gumbel noise needs an rng");
    for (double& v : z) {
      const double u = std::clamp(rng->uniform_open(), kGumbelClamp, 1.0 - kGumbelClamp);
      v += -std::log(-std::log(u));
    }
  }
  GumbelSample s{std::vector<double>(k, 0.0), std::vector<double>(k)};
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += (s.soft[i] = std::exp((z[i] - top) / tau));
  for (double& v : s.soft) v /= total;
  s.hard[argmax(s.soft)] = 1.0;
  return s;
}

std::vector<double> gumbel_st_backward(std::span<const double> upstream,
                                       std::span<const double> soft, double tau) {
  require(upstream.size() == soft.size(), "gumbel_st_backward: shape mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < soft.size(); ++i) dot += soft[i] * upstream[i];
  std::vector<double> g(soft.size());
  for (std::size_t i = 0; i < soft.size(); ++i) g[i] = soft[i] * (upstream[i] - dot) / tau;
  return g;
}

WtaPredictor::WtaPredictor(PredictorConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  nn::Rng rng = nn::Rng(seed).split(0x70726564);  // "pred"
  const auto& d = config_.encoder_dims;
  const std::size_t last = d.size() - 1;
  for (std::size_t i = 0; i + 1 < last; ++i) {
    encoder_.push(nn::Linear(d[i], d[i + 1], true, rng, "encoder." + std::to_string(i)));
    encoder_.push(nn::LeakyRelu(config_.slope));
  }
  encoder_.push(nn::LayerNorm(d[last - 1], config_.layernorm_eps, "encoder.norm"));
  encoder_.push(nn::Linear(d[last - 1], d[last], true, rng, "encoder." + std::to_string(last - 1)));
  const double bound = 1.0 / std::sqrt(static_cast<double>(code_dim()));
  Tensor2 w(config_.tasks, code_dim());
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  readout_ = nn::Parameter("readout.weight", std::move(w));
}

ForwardTrace WtaPredictor::finish(Tensor2 a, WtaMode mode, double tau, nn::Rng* rng) const {
  ForwardTrace t;
  t.mode = mode;
  t.tau = tau;
  t.soft = Tensor2(a.rows(), a.cols());
  t.hard = Tensor2(a.rows(), a.cols());
  const auto& heads = config_.heads;
  const bool noise = mode == WtaMode::train && heads.noise;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    std::size_t start = 0;
    for (std::size_t size : heads.sizes) {
      auto block = row.subspan(start, size);
      auto sample = gumbel_st_forward(block, tau, rng, noise);
      if (mode == WtaMode::eval) {
        std::fill(sample.hard.begin(), sample.hard.end(), 0.0);
        sample.hard[argmax(block)] = 1.0;
      }
      std::copy(sample.soft.begin(), sample.soft.end(), t.soft.row(r).begin() + static_cast<std::ptrdiff_t>(start));
      std::copy(sample.hard.begin(), sample.hard.end(), t.hard.row(r).begin() + static_cast<std::ptrdiff_t>(start));
      start += size;
    }
  }
  t.a = std::move(a);
  t.logits = nn::matmul_transposed(t.code(), readout_.value);
  t.y = nn::sigmoid(t.logits);
  if (!t.logits.all_finite())
    fail(ErrorCode::diverged, "non-finite activations in the predictor forward pass");
  return t;
}

ForwardTrace WtaPredictor::forward(const Tensor2& x, WtaMode mode, std::size_t epoch, nn::Rng* rng) {
  require(x.cols() == input_dim(), "predictor input width " + std::to_string(x.cols()) +
                                       " != encoder input " + std::to_string(input_dim()));
  if (mode == WtaMode::eval) return evaluate(x);
  nn::ForwardContext ctx{nn::Mode::train, rng};
  Tensor2 a = encoder_.forward(x, ctx);
  return finish(std::move(a), mode, config_.heads.temperature(epoch), rng);
}

void WtaPredictor::backward(const ForwardTrace& trace, const Tensor2& grad_logits) {
  require(trace.mode != WtaMode::eval, "backward needs a train or relaxed forward trace");
  require(grad_logits.same_shape(trace.logits), "backward: gradient shape mismatch");
  const Tensor2& code = trace.code();
  Tensor2 gw = nn::transposed_matmul(grad_logits, code);
  auto dst = readout_.grad.values();
  auto src = gw.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];

  Tensor2 grad_code = nn::matmul(grad_logits, readout_.value);
  Tensor2 grad_a(grad_code.rows(), grad_code.cols());
  for (std::size_t r = 0; r < grad_code.rows(); ++r) {
    std::size_t start = 0;
    for (std::size_t size : config_.heads.sizes) {
      auto g = gumbel_st_backward(grad_code.row(r).subspan(start, size),
                                  trace.soft.row(r).subspan(start, size), trace.tau);
      std::copy(g.begin(), g.end(), grad_a.row(r).begin() + static_cast<std::ptrdiff_t>(start));
      start += size;
    }
  }
  encoder_.backward(grad_a, false);
}

Tensor2 WtaPredictor::activations(const Tensor2& x) const {
  require(x.cols() == input_dim(), "predictor input width " + std::to_string(x.cols()) +
                                       " != encoder input " + std::to_string(input_dim()));
  return encoder_.infer(x);
}

Tensor2 WtaPredictor::encode(const Tensor2& x) const { return evaluate(x).hard; }

ForwardTrace WtaPredictor::evaluate(const Tensor2& x) const {
  return finish(activations(x), WtaMode::eval, config_.heads.tau, nullptr);
}

std::vector<nn::Parameter*> WtaPredictor::parameters() {
  auto params = encoder_.parameters();
  params.push_back(&readout_);
  return params;
}

void WtaPredictor::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

void write_checkpoint(const std::filesystem::path& path, WtaPredictor& model,
                      const nlohmann::json& metadata) {
  nlohmann::json header{{"predictor", to_json(model.config())}, {"metadata", metadata}};
  io::BinaryWriter w(path);
  w.magic("WTACKPT1");
  w.u32(1);
  w.string(header.dump());
  auto params = model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.string(p->name);
    w.u64(p->value.rows());
    w.u64(p->value.cols());
    w.f64s(p->value.values());
  }
  w.close();
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  io::BinaryReader r(path);
  r.expect_magic("WTACKPT1");
  if (r.u32() != 1) fail(ErrorCode::io, "unsupported checkpoint version in " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.string());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, "malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  PredictorConfig cfg;
  try {
    cfg = predictor_config_from_json(header.at("predictor"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, "malformed predictor config in " + path.string() + ": " + e.what());
  }
  WtaPredictor model(cfg, 0);
  auto params = model.parameters();
  const auto count = r.u32();
  if (count != params.size()) fail(ErrorCode::io, "checkpoint parameter count mismatch");
  for (auto* p : params) {
    const std::string name = r.string(4096);
    const auto rows = r.u64(), cols = r.u64();
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols())
      fail(ErrorCode::io, "checkpoint parameter '" + name + "' does not match the model layout");
    r.f64s(p->value.values());
  }
  return {std::move(model), header.value("metadata", nlohmann::json::object())};
}

}  // namespace wta::model
