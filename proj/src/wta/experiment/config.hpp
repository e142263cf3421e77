#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wta/data/entanglement.hpp"
#include "wta/data/latent.hpp"
#include "wta/generalization/generalization.hpp"
#include "wta/model/predictor.hpp"
#include "wta/train/trainer.hpp"

namespace wta::experiment {

enum class Setup { matched, unmatched, confounding, dsprites, custom };

const char* setup_name(Setup s);
Setup parse_setup(const std::string& name);

enum class EncoderChoice { trained, ideal };

struct GeneralizeConfig {
  generalization::SplitSpec split{};
  std::vector<std::size_t> train_sizes{100};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t trials = 20;
  std::size_t max_epochs = 500;
  std::size_t patience = 10;
  EncoderChoice encoder = EncoderChoice::trained;
};

// One experiment: data generation, multi-task training over several seeds,
// evaluation and the downstream generalization benchmark.
struct ExperimentConfig {
  Setup setup = Setup::custom;
  data::LatentStructure structure;                 // task-visible factors
  std::optional<data::LatentStructure> confounders;
  data::EntanglementConfig phi;                    // unused for dsprites
  model::PredictorConfig predictor;
  std::vector<std::size_t> irrelevant_factors;
  std::size_t train_samples = 100000;
  std::size_t test_samples = 10000;
  std::uint64_t data_seed = 0;                     // Phi, tasks and samples
  train::TrainConfig train;                        // train.seed is replaced per run
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5}; // initialisation and shuffling
  double mae_threshold = 1e-6;
  GeneralizeConfig generalize;
  std::filesystem::path output = "runs/experiment";

  // Cross-field checks; throws ErrorCode::config naming the offending field.
  void validate() const;
  std::size_t input_dim() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Preset files live in `dir` as <name>.json.
std::filesystem::path preset_path(const std::string& name, const std::filesystem::path& dir);

}  // namespace wta::experiment
