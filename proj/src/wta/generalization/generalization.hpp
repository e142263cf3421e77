#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wta/data/latent.hpp"
#include "wta/generalization/readout.hpp"
#include "wta/nn/rng.hpp"
#include "wta/nn/tensor.hpp"

namespace wta::generalization {

enum class SplitKind { random, pair_of_categories, constant_category };

struct CategorySelector {
  std::size_t factor = 0;
  std::size_t category = 0;
};

struct SplitSpec {
  SplitKind kind = SplitKind::random;
  // random
  std::size_t val_count = 500;
  std::size_t test_count = 500;
  // pair-of-categories: samples matching both selectors of a pair
  CategorySelector test_a{0, 0}, test_b{1, 0};
  CategorySelector val_a{0, 1}, val_b{1, 1};
  // constant-category: train holds `constant`, validation `constant_val`
  CategorySelector constant{0, 0};
  CategorySelector constant_val{0, 1};
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const SplitSpec& s);
SplitSpec split_spec_from_json(const nlohmann::json& j);
const char* split_kind_name(SplitKind k);
SplitKind parse_split_kind(const std::string& name);

// Row indices into a sample list; the three parts partition it.
struct Split {
  std::vector<std::size_t> train, val, test;
};

// Splits the rows of `categories` (N x m, one sample per row) by kind.
Split make_split(const data::LatentStructure& s, std::span<const data::Category> categories, const SplitSpec& spec);
// Over the lexicographic enumeration of Z.
Split make_split(const data::LatentStructure& s, const SplitSpec& spec);
// True when the parts are disjoint and cover 0..n-1.
bool is_partition(const Split& split, std::size_t n);

struct HpoSpace {
  std::vector<std::size_t> hidden_dims{16, 32, 64, 128, 256};
  std::size_t min_layers = 1, max_layers = 5;
  std::vector<double> dropouts{0.0, 0.1, 0.2};
  double lr_min = 1e-4, lr_max = 1e-1;          // log-uniform
  double wd_min = 1e-6, wd_max = 1e-2;          // log-uniform
  std::vector<std::size_t> batch_sizes{16, 32, 64, 128, 256};

  ReadoutConfig sample(nn::Rng& rng) const;
  bool contains(const ReadoutConfig& c) const;
};

struct HpoOptions {
  std::size_t trials = 20;
  FitOptions fit{};
};

struct HpoTrial {
  ReadoutConfig config;
  FitResult fit;
};

struct HpoResult {
  ReadoutConfig best;
  double best_val_loss = 0.0;
  std::vector<HpoTrial> trials;
};

// Uniform random search; every trial fits a fresh readout with early stopping
// and the lowest validation BCE wins (first one on ties).
HpoResult hpo_search(const HpoSpace& space, const HpoOptions& options, const nn::Tensor2& x_train,
                     const nn::Tensor2& t_train, const nn::Tensor2& x_val, const nn::Tensor2& t_val,
                     std::uint64_t seed);

struct ComparisonOptions {
  std::vector<std::size_t> train_sizes{100};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  HpoSpace space{};
  HpoOptions hpo{};
  std::vector<std::size_t> irrelevant_factors;  // factors the sampled task ignores
  std::size_t max_task_draws = 100;
  std::size_t jobs = 1;  // (size, seed) runs evaluated concurrently
};

// One representation's result for one (size, seed).
struct RunScore {
  std::optional<double> train_auc;
  std::optional<double> test_auc;
  ReadoutConfig chosen;
  std::vector<HpoTrial> trials;
};

struct SeedResult {
  std::size_t train_size = 0;
  std::uint64_t seed = 0;
  std::size_t task_draws = 0;
  RunScore x, z_hat;
};

struct SummaryRow {
  std::size_t train_size = 0;
  double train_mean_x = 0, train_sd_x = 0, train_mean_z = 0, train_sd_z = 0;
  double test_mean_x = 0, test_sd_x = 0, test_mean_z = 0, test_sd_z = 0;
};

struct ComparisonReport {
  std::string split;
  std::vector<SeedResult> runs;
  std::vector<SummaryRow> rows;
};

// Inputs are aligned row-wise: z one-hot latents (targets come from a task
// over z), x the entangled inputs, z_hat the code of the encoder under test.
// The x-model never sees z_hat and vice versa.
ComparisonReport run_comparison(const data::LatentStructure& s, const nn::Tensor2& z, const nn::Tensor2& x,
                                const nn::Tensor2& z_hat, const Split& split, const ComparisonOptions& options,
                                const std::string& split_name);

// Population mean and standard deviation of the present values.
std::pair<double, double> mean_sd(std::span<const double> values);

nlohmann::json to_json(const ComparisonReport& r);
void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& r);

}  // namespace wta::generalization
