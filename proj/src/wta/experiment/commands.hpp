#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "wta/data/dataset.hpp"
#include "wta/experiment/config.hpp"
#include "wta/tasks/tasks.hpp"
#include "wta/theory/structured.hpp"

namespace wta::experiment {

using Logger = std::function<void(const std::string&)>;

// Everything gen-data leaves on disk, loaded back.
struct ExperimentData {
  tasks::TaskBank bank;
  data::Dataset train, test;
  data::Dataset eval;           // all of Z when enumerable, otherwise the test set
  bool eval_exhaustive = false;
};

std::filesystem::path data_dir(const ExperimentConfig& c);
std::filesystem::path seed_dir(const ExperimentConfig& c, std::uint64_t seed);

// Each command writes its outputs plus a manifest.json and returns a summary.
nlohmann::json gen_data(const ExperimentConfig& c, const Logger& log = {});
ExperimentData load_data(const ExperimentConfig& c);
nlohmann::json train_runs(const ExperimentConfig& c, std::size_t jobs = 1, const Logger& log = {});
nlohmann::json evaluate(const ExperimentConfig& c, const std::optional<std::filesystem::path>& checkpoint = {},
                        const Logger& log = {});
nlohmann::json generalize(const ExperimentConfig& c, const std::optional<std::filesystem::path>& checkpoint = {},
                          std::size_t jobs = 1, const Logger& log = {});
nlohmann::json verify_theorem(std::size_t m, std::size_t l_c, const theory::TheoremOptions& options,
                              const std::filesystem::path& out, const Logger& log = {});
nlohmann::json render_sprites(const std::filesystem::path& out, bool write_pngs = true, const Logger& log = {});

// FNV-1a over the file contents, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace wta::experiment
