#include "wta/experiment/config.hpp"

#include <fstream>
#include <numeric>
#include <set>

#include "wta/error.hpp"
#include "wta/vision/sprites.hpp"

namespace wta::experiment {

const char* setup_name(Setup s) {
  switch (s) {
    case Setup::matched: return "matched";
    case Setup::unmatched: return "unmatched";
    case Setup::confounding: return "confounding";
    case Setup::dsprites: return "dsprites";
    case Setup::custom: return "custom";
  }
  return "?";
}

Setup parse_setup(const std::string& name) {
  for (Setup s : {Setup::matched, Setup::unmatched, Setup::confounding, Setup::dsprites, Setup::custom})
    if (name == setup_name(s)) return s;
  fail(ErrorCode::config, "unknown setup '" + name + "'");
}

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) fail(ErrorCode::config, msg);
}

std::vector<std::size_t> counts_of(const data::LatentStructure& s) {
  return {s.counts().begin(), s.counts().end()};
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
  std::set<std::string> k(known.begin(), known.end());
  for (const auto& [key, value] : j.items())
    check(k.count(key) == 1, "unknown key '" + key + "' in " + where);
}

}  // namespace

std::size_t ExperimentConfig::input_dim() const {
  return setup == Setup::dsprites ? vision::kPixels : phi.dims.back();
}

void ExperimentConfig::validate() const {
  check(!structure.empty(), "structure: at least one latent factor is required");
  if (setup == Setup::dsprites) {
    check(structure == vision::sprite_structure(), "structure: dsprites uses (3, 8, 8, 10)");
    check(!confounders, "confounders: not supported for dsprites");
  } else {
    const std::size_t l_full = structure.total_categories() + (confounders ? confounders->total_categories() : 0);
    check(phi.dims.size() >= 2, "phi.dims: need an input and an output width");
    check(phi.dims.front() == l_full, "phi.dims[0] must equal the one-hot length including confounders (" +
                                          std::to_string(l_full) + ")");
    check(phi.slope >= 0.0, "phi.slope must be non-negative");
  }
  check(setup != Setup::confounding || confounders, "confounders: the confounding setup needs them");
  const auto& dims = predictor.encoder_dims;
  check(dims.size() >= 2, "model.encoder_dims: need at least two widths");
  check(dims.front() == input_dim(), "model.encoder_dims[0] must equal the input width " + std::to_string(input_dim()));
  const std::size_t code = std::accumulate(predictor.heads.sizes.begin(), predictor.heads.sizes.end(), std::size_t{0});
  check(!predictor.heads.sizes.empty(), "model.heads: at least one WTA head");
  check(dims.back() == code, "model.encoder_dims must end at the sum of head sizes (" + std::to_string(code) + ")");
  for (auto h : predictor.heads.sizes) check(h >= 2, "model.heads: every head needs at least 2 units");
  check(predictor.heads.tau > 0.0 && predictor.heads.tau_decay > 0.0, "model.tau and model.tau_decay must be positive");
  check(predictor.tasks >= 1, "tasks.count must be at least 1");
  for (auto f : irrelevant_factors)
    check(f < structure.factors(), "tasks.irrelevant_factors: factor " + std::to_string(f) + " does not exist");
  check(train_samples > 0 && test_samples > 0, "data.train and data.test must be positive");
  check(!seeds.empty(), "seeds: at least one run seed");
  check(mae_threshold > 0.0, "mae_threshold must be positive");
  try {
    train.validate();
    predictor.validate();
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
  check(!generalize.train_sizes.empty() && !generalize.seeds.empty(), "generalization: need sizes and seeds");
  for (auto n : generalize.train_sizes) check(n > 0, "generalization.train_sizes must be positive");
  check(generalize.trials > 0 && generalize.max_epochs > 0, "generalization: trials and max_epochs must be positive");
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json train = train::to_json(c.train);
  train.erase("seed");
  nlohmann::json j{
      {"setup", setup_name(c.setup)},
      {"structure", counts_of(c.structure)},
      {"model",
       {{"encoder_dims", c.predictor.encoder_dims},
        {"heads", c.predictor.heads.sizes},
        {"tau", c.predictor.heads.tau},
        {"tau_decay", c.predictor.heads.tau_decay},
        {"slope", c.predictor.slope}}},
      {"tasks", {{"count", c.predictor.tasks}, {"irrelevant_factors", c.irrelevant_factors}}},
      {"data", {{"train", c.train_samples}, {"test", c.test_samples}, {"seed", c.data_seed}}},
      {"train", train},
      {"seeds", c.seeds},
      {"mae_threshold", c.mae_threshold},
      {"generalization",
       {{"split", generalization::to_json(c.generalize.split)},
        {"train_sizes", c.generalize.train_sizes},
        {"seeds", c.generalize.seeds},
        {"trials", c.generalize.trials},
        {"max_epochs", c.generalize.max_epochs},
        {"patience", c.generalize.patience},
        {"encoder", c.generalize.encoder == EncoderChoice::ideal ? "ideal" : "trained"}}},
      {"output", c.output.string()}};
  if (c.setup != Setup::dsprites)
    j["phi"] = {{"dims", c.phi.dims}, {"slope", c.phi.slope}, {"bias", c.phi.bias}};
  if (c.confounders) j["confounders"] = counts_of(*c.confounders);
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    check(j.is_object(), "config must be a JSON object");
    reject_unknown(j,
                   {"setup", "structure", "confounders", "phi", "model", "tasks", "data", "train", "seeds",
                    "mae_threshold", "generalization", "output", "description"},
                   "config");
    ExperimentConfig c;
    c.setup = parse_setup(j.value("setup", std::string("custom")));
    c.structure = data::LatentStructure(j.at("structure").get<std::vector<std::size_t>>());
    if (j.contains("confounders") && !j["confounders"].empty())
      c.confounders = data::LatentStructure(j["confounders"].get<std::vector<std::size_t>>());
    if (j.contains("phi")) {
      const auto& p = j["phi"];
      reject_unknown(p, {"dims", "slope", "bias"}, "phi");
      c.phi.dims = p.at("dims").get<std::vector<std::size_t>>();
      c.phi.slope = p.value("slope", c.phi.slope);
      c.phi.bias = p.value("bias", c.phi.bias);
    }
    const auto& m = j.at("model");
    reject_unknown(m, {"encoder_dims", "heads", "tau", "tau_decay", "slope"}, "model");
    c.predictor.encoder_dims = m.at("encoder_dims").get<std::vector<std::size_t>>();
    c.predictor.heads.sizes = m.at("heads").get<std::vector<std::size_t>>();
    c.predictor.heads.tau = m.value("tau", 1.0);
    c.predictor.heads.tau_decay = m.value("tau_decay", 1.0);
    c.predictor.slope = m.value("slope", c.predictor.slope);
    if (j.contains("tasks")) {
      const auto& t = j["tasks"];
      reject_unknown(t, {"count", "irrelevant_factors"}, "tasks");
      c.predictor.tasks = t.value("count", c.predictor.tasks);
      c.irrelevant_factors = t.value("irrelevant_factors", c.irrelevant_factors);
    }
    if (j.contains("data")) {
      const auto& d = j["data"];
      reject_unknown(d, {"train", "test", "seed"}, "data");
      c.train_samples = d.value("train", c.train_samples);
      c.test_samples = d.value("test", c.test_samples);
      c.data_seed = d.value("seed", c.data_seed);
    }
    if (j.contains("train")) {
      reject_unknown(j["train"],
                     {"epochs", "batch_size", "learning_rate", "eta_min", "t_max", "beta1", "beta2", "adam_eps",
                      "weight_decay", "l1_readout"},
                     "train");
      c.train = train::train_config_from_json(j["train"]);
    }
    c.seeds = j.value("seeds", c.seeds);
    c.mae_threshold = j.value("mae_threshold", c.mae_threshold);
    if (j.contains("generalization")) {
      const auto& g = j["generalization"];
      reject_unknown(g, {"split", "train_sizes", "seeds", "trials", "max_epochs", "patience", "encoder"},
                     "generalization");
      if (g.contains("split")) c.generalize.split = generalization::split_spec_from_json(g["split"]);
      c.generalize.train_sizes = g.value("train_sizes", c.generalize.train_sizes);
      c.generalize.seeds = g.value("seeds", c.generalize.seeds);
      c.generalize.trials = g.value("trials", c.generalize.trials);
      c.generalize.max_epochs = g.value("max_epochs", c.generalize.max_epochs);
      c.generalize.patience = g.value("patience", c.generalize.patience);
      const auto enc = g.value("encoder", std::string("trained"));
      check(enc == "trained" || enc == "ideal", "generalization.encoder must be 'trained' or 'ideal'");
      c.generalize.encoder = enc == "ideal" ? EncoderChoice::ideal : EncoderChoice::trained;
    }
    c.output = j.value("output", c.output.string());
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("malformed config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config) throw;
    fail(ErrorCode::config, e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::filesystem::path preset_path(const std::string& name, const std::filesystem::path& dir) {
  for (char ch : name)
    check(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_', "invalid preset name '" + name + "'");
  auto p = dir / (name + ".json");
  if (!std::filesystem::exists(p)) fail(ErrorCode::config, "no preset named '" + name + "' in " + dir.string());
  return p;
}

}  // namespace wta::experiment
