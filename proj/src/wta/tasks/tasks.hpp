#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "wta/data/dataset.hpp"
#include "wta/data/latent.hpp"
#include "wta/nn/rng.hpp"
#include "wta/nn/tensor.hpp"

namespace wta::tasks {

// Class-conditional categorical parameters of one binary task. `p` and `q`
// concatenate one probability vector per latent factor.
struct TaskSpec {
  std::vector<double> p;
  std::vector<double> q;
  double prior = 0.5;  // P(A = 1)

  void validate(const data::LatentStructure& s, double tol = 1e-9) const;
};

struct TaskOptions {
  // Factors whose p and q blocks are forced equal, so the posterior does not
  // depend on them.
  std::vector<std::size_t> irrelevant_factors;
};

TaskSpec sample_task(const data::LatentStructure& s, nn::Rng& rng, const TaskOptions& opts = {});

// Per-entry b_i / m added to row i; exact for vectors with exactly m ones.
nn::Tensor2 fold_bias(const nn::Tensor2& w_unfolded, std::span<const double> bias,
                      std::size_t factors);

class TaskBank {
 public:
  TaskBank() = default;
  TaskBank(data::LatentStructure structure, std::vector<TaskSpec> tasks);

  const data::LatentStructure& structure() const noexcept { return structure_; }
  const std::vector<TaskSpec>& tasks() const noexcept { return tasks_; }
  std::size_t size() const noexcept { return tasks_.size(); }
  const nn::Tensor2& w_unfolded() const noexcept { return w_unfolded_; }
  std::span<const double> bias() const noexcept { return bias_; }
  const nn::Tensor2& w_folded() const noexcept { return w_folded_; }
  std::size_t rank() const noexcept { return rank_; }
  bool full_column_rank() const noexcept { return rank_ == structure_.total_categories(); }

 private:
  data::LatentStructure structure_;
  std::vector<TaskSpec> tasks_;
  nn::Tensor2 w_unfolded_;
  std::vector<double> bias_;
  nn::Tensor2 w_folded_;
  std::size_t rank_ = 0;
};

TaskBank sample_task_bank(const data::LatentStructure& s, std::size_t n, nn::Rng& rng,
                          const TaskOptions& opts = {});

// sigma(W_folded z) for one one-hot latent vector.
std::vector<double> posterior(const TaskBank& bank, std::span<const double> onehot);
// Same for every row of a one-hot matrix.
nn::Tensor2 posterior(const TaskBank& bank, const nn::Tensor2& onehots);

// P(A=1 | z) straight from the class likelihoods, without logarithms.
double bayes_oracle(const TaskSpec& task, std::span<const double> onehot);

nn::Tensor2 label_dataset(const TaskBank& bank, const data::Dataset& ds);

void write_task_bank(const std::filesystem::path& path, const TaskBank& bank);
TaskBank read_task_bank(const std::filesystem::path& path);

}  // namespace wta::tasks
