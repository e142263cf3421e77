#include "wta/data/entanglement.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>
#include <unordered_map>

#include "wta/binary_io.hpp"
#include "wta/error.hpp"
#include "wta/nn/ops.hpp"
#include "wta/nn/rng.hpp"

namespace wta::data {

namespace {

void validate(const EntanglementConfig& config) {
  require(config.dims.size() >= 2, "entanglement map needs at least an input and output dim");
  for (std::size_t d : config.dims) require(d > 0, "entanglement dims must be positive");
  require(config.slope > 0.0 && config.slope < 1.0, "leaky slope must lie in (0,1)");
}

}  // namespace

EntanglementMap::EntanglementMap(EntanglementConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  validate(config_);
  nn::Rng rng(seed);
  for (std::size_t i = 0; i + 1 < config_.dims.size(); ++i) {
    const std::size_t in = config_.dims[i], out = config_.dims[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Layer layer{nn::Tensor2(out, in), {}};
    for (double& w : layer.weights.values()) w = rng.uniform(-bound, bound);
    if (config_.bias) {
      layer.bias.resize(out);
      for (double& b : layer.bias) b = rng.uniform(-bound, bound);
    }
    layers_.push_back(std::move(layer));
  }
}

EntanglementMap::EntanglementMap(EntanglementConfig config, std::uint64_t seed,
                                 std::vector<Layer> layers)
    : config_(std::move(config)), seed_(seed), layers_(std::move(layers)) {
  validate(config_);
  require(layers_.size() + 1 == config_.dims.size(), "entanglement layer count mismatch");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    require(layers_[i].weights.rows() == config_.dims[i + 1] &&
                layers_[i].weights.cols() == config_.dims[i],
            "entanglement layer shape mismatch");
    require(layers_[i].bias.empty() == !config_.bias, "entanglement bias presence mismatch");
  }
}

nn::Tensor2 EntanglementMap::apply(const nn::Tensor2& onehots) const {
  require(onehots.cols() == input_dim(), "entangle: latent length " +
                                             std::to_string(onehots.cols()) +
                                             " != map input " + std::to_string(input_dim()));
  nn::Tensor2 h = onehots;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = nn::linear_forward(h, layers_[i].weights, layers_[i].bias);
    if (i + 1 < layers_.size()) h = nn::leaky_relu(h, config_.slope);
  }
  return h;
}

std::vector<double> EntanglementMap::apply(std::span<const double> onehot) const {
  nn::Tensor2 out = apply(nn::Tensor2::row_vector(onehot));
  return out.storage();
}

EntanglementMap build_entanglement(const LatentStructure& full_structure,
                                   const EntanglementConfig& config, std::uint64_t seed) {
  require(!config.dims.empty() && config.dims.front() == full_structure.total_categories(),
          "entanglement input dim must equal the one-hot length " +
              std::to_string(full_structure.total_categories()));
  return EntanglementMap(config, seed);
}

double min_pairwise_distance(const nn::Tensor2& rows) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    auto a = rows.row(i);
    for (std::size_t j = i + 1; j < rows.rows(); ++j) {
      auto b = rows.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.size() && s < best * best; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
      best = std::min(best, std::sqrt(s));
    }
  }
  return best;
}

std::optional<std::pair<std::size_t, std::size_t>> find_collision(const nn::Tensor2& latents,
                                                                   const nn::Tensor2& observations) {
  require(latents.rows() == observations.rows(), "find_collision: row count mismatch");
  auto hash_row = [](std::span<const double> r) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : r) h = nn::mix64(h ^ std::bit_cast<std::uint64_t>(v));
    return h;
  };
  std::unordered_map<std::uint64_t, std::size_t> seen;
  seen.reserve(observations.rows());
  for (std::size_t i = 0; i < observations.rows(); ++i) {
    auto [it, inserted] = seen.emplace(hash_row(observations.row(i)), i);
    if (inserted) continue;
    const std::size_t j = it->second;
    const bool same_obs = std::equal(observations.row(i).begin(), observations.row(i).end(),
                                     observations.row(j).begin());
    const bool same_latent = std::equal(latents.row(i).begin(), latents.row(i).end(),
                                        latents.row(j).begin());
    if (same_obs && !same_latent) return std::make_pair(j, i);
  }
  return std::nullopt;
}

InjectiveBuild build_injective_entanglement(const LatentStructure& full_structure,
                                            const EntanglementConfig& config, std::uint64_t seed,
                                            std::uint32_t max_attempts) {
  const bool exhaustive = full_structure.combinations() <= kExhaustiveInjectivityLimit;
  std::optional<CodeMatrix> code;
  if (exhaustive) code = enumerate_code_matrix(full_structure);
  for (std::uint32_t attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : nn::mix64(seed + attempt);
    EntanglementMap map = build_entanglement(full_structure, config, s);
    if (!exhaustive) return {std::move(map), attempt + 1, false, 0.0};
    const double d = min_pairwise_distance(map.apply(code->rows));
    if (d > kMinDistinctDistance) return {std::move(map), attempt + 1, true, d};
  }
  fail(ErrorCode::internal, "no injective entanglement map found in " +
                                std::to_string(max_attempts) + " attempts");
}

void write_entanglement(const std::filesystem::path& path, const EntanglementMap& map) {
  io::BinaryWriter w(path);
  w.magic("WTAPHI01");
  w.u32(1);
  w.u64(map.seed());
  w.f64(map.config().slope);
  w.u32(map.config().bias ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(map.config().dims.size()));
  for (std::size_t d : map.config().dims) w.u64(d);
  for (const auto& layer : map.layers()) {
    w.f64s(layer.weights.values());
    w.f64s(layer.bias);
  }
  w.close();
}

EntanglementMap read_entanglement(const std::filesystem::path& path) {
  io::BinaryReader r(path);
  r.expect_magic("WTAPHI01");
  if (r.u32() != 1) fail(ErrorCode::io, "unsupported entanglement file version");
  const std::uint64_t seed = r.u64();
  EntanglementConfig cfg;
  cfg.slope = r.f64();
  cfg.bias = r.u32() != 0;
  const auto n = r.u32();
  r.check_count(n, 64, "layer count");
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto d = r.u64();
    r.check_count(d, 1u << 20, "layer width");
    cfg.dims.push_back(d);
  }
  std::vector<EntanglementMap::Layer> layers;
  for (std::size_t i = 0; i + 1 < cfg.dims.size(); ++i) {
    EntanglementMap::Layer layer{nn::Tensor2(cfg.dims[i + 1], cfg.dims[i]), {}};
    r.f64s(layer.weights.values());
    if (cfg.bias) {
      layer.bias.resize(cfg.dims[i + 1]);
      r.f64s(layer.bias);
    }
    layers.push_back(std::move(layer));
  }
  return EntanglementMap(std::move(cfg), seed, std::move(layers));
}

}  // namespace wta::data
