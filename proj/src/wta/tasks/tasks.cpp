#include "wta/tasks/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "wta/error.hpp"
#include "wta/nn/linalg.hpp"
#include "wta/nn/ops.hpp"

namespace wta::tasks {

using data::LatentStructure;
using nn::Tensor2;

namespace {

constexpr double kMinComponent = 1e-12;
constexpr double kRankTolerance = 1e-8;

void dirichlet_block(nn::Rng& rng, std::span<double> out) {
  for (;;) {
    double total = 0.0;
    for (double& v : out) total += (v = rng.exponential());
    bool ok = true;
    for (double& v : out) {
      v /= total;
      ok = ok && v >= kMinComponent;
    }
    if (ok) return;
  }
}

}  // namespace

void TaskSpec::validate(const LatentStructure& s, double tol) const {
  require(p.size() == s.total_categories() && q.size() == s.total_categories(),
          "task parameter length does not match the latent structure");
  require(prior > 0.0 && prior < 1.0, "task prior must lie in (0,1)");
  for (std::size_t k = 0; k < s.factors(); ++k) {
    double sp = 0.0, sq = 0.0;
    for (std::size_t j = 0; j < s.count(k); ++j) {
      const double a = p[s.offset(k) + j], b = q[s.offset(k) + j];
      require(a > 0.0 && b > 0.0, "task probabilities must be positive");
      sp += a;
      sq += b;
    }
    require(std::abs(sp - 1.0) <= tol && std::abs(sq - 1.0) <= tol,
            "task probabilities must sum to one within every factor");
  }
}

TaskSpec sample_task(const LatentStructure& s, nn::Rng& rng, const TaskOptions& opts) {
  TaskSpec t{std::vector<double>(s.total_categories()), std::vector<double>(s.total_categories()),
             0.5};
  for (std::size_t k = 0; k < s.factors(); ++k)
    dirichlet_block(rng, std::span<double>(t.p).subspan(s.offset(k), s.count(k)));
  for (std::size_t k = 0; k < s.factors(); ++k)
    dirichlet_block(rng, std::span<double>(t.q).subspan(s.offset(k), s.count(k)));
  t.prior = rng.uniform_open();
  for (std::size_t k : opts.irrelevant_factors) {
    require(k < s.factors(), "irrelevant factor index out of range");
    std::copy_n(t.p.begin() + static_cast<std::ptrdiff_t>(s.offset(k)), s.count(k),
                t.q.begin() + static_cast<std::ptrdiff_t>(s.offset(k)));
  }
  return t;
}

Tensor2 fold_bias(const Tensor2& w_unfolded, std::span<const double> bias, std::size_t factors) {
  require(bias.size() == w_unfolded.rows(), "fold_bias: bias length must equal the task count");
  require(factors > 0, "fold_bias: factor count must be positive");
  Tensor2 out = w_unfolded;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    const double share = bias[i] / static_cast<double>(factors);
    for (double& v : out.row(i)) v += share;
  }
  return out;
}

TaskBank::TaskBank(LatentStructure structure, std::vector<TaskSpec> tasks)
    : structure_(std::move(structure)), tasks_(std::move(tasks)) {
  const std::size_t n = tasks_.size(), l = structure_.total_categories();
  require(n > 0, "task bank needs at least one task");
  w_unfolded_ = Tensor2(n, l);
  bias_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TaskSpec& t = tasks_[i];
    t.validate(structure_);
    for (std::size_t j = 0; j < l; ++j) w_unfolded_(i, j) = std::log(t.p[j] / t.q[j]);
    bias_[i] = std::log(t.prior / (1.0 - t.prior));
  }
  w_folded_ = fold_bias(w_unfolded_, bias_, structure_.factors());
  rank_ = nn::matrix_rank(w_folded_, kRankTolerance);
}

TaskBank sample_task_bank(const LatentStructure& s, std::size_t n, nn::Rng& rng,
                          const TaskOptions& opts) {
  std::vector<TaskSpec> tasks;
  tasks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) tasks.push_back(sample_task(s, rng, opts));
  return TaskBank(s, std::move(tasks));
}

std::vector<double> posterior(const TaskBank& bank, std::span<const double> onehot) {
  require(onehot.size() == bank.structure().total_categories(), "posterior: latent length mismatch");
  std::vector<double> out(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    auto w = bank.w_folded().row(i);
    double a = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) a += w[j] * onehot[j];
    out[i] = nn::sigmoid(a);
  }
  return out;
}

Tensor2 posterior(const TaskBank& bank, const Tensor2& onehots) {
  return nn::sigmoid(nn::matmul_transposed(onehots, bank.w_folded()));
}

double bayes_oracle(const TaskSpec& task, std::span<const double> onehot) {
  require(onehot.size() == task.p.size(), "bayes_oracle: latent length mismatch");
  double lik1 = 1.0, lik0 = 1.0;
  for (std::size_t j = 0; j < onehot.size(); ++j) {
    if (onehot[j] != 1.0) continue;
    lik1 *= task.p[j];
    lik0 *= task.q[j];
  }
  const double joint1 = task.prior * lik1;
  return joint1 / (joint1 + (1.0 - task.prior) * lik0);
}

Tensor2 label_dataset(const TaskBank& bank, const data::Dataset& ds) {
  require(ds.structure == bank.structure(), "label_dataset: dataset and task bank disagree on structure");
  return posterior(bank, ds.onehots());
}

namespace {

nlohmann::json matrix_json(const Tensor2& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

}  // namespace

void write_task_bank(const std::filesystem::path& path, const TaskBank& bank) {
  nlohmann::json j;
  j["format"] = "wta-task-bank";
  j["version"] = 1;
  j["structure"] = std::vector<std::size_t>(bank.structure().counts().begin(),
                                            bank.structure().counts().end());
  auto tasks = nlohmann::json::array();
  for (const auto& t : bank.tasks()) tasks.push_back({{"p", t.p}, {"q", t.q}, {"prior", t.prior}});
  j["tasks"] = std::move(tasks);
  j["w_unfolded"] = matrix_json(bank.w_unfolded());
  j["bias"] = std::vector<double>(bank.bias().begin(), bank.bias().end());
  j["w_folded"] = matrix_json(bank.w_folded());
  j["rank"] = bank.rank();
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string());
  out << j.dump(1) << '\n';
  if (!out) fail(ErrorCode::io, "write failed on " + path.string());
}

TaskBank read_task_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format") != "wta-task-bank" || j.at("version") != 1)
      fail(ErrorCode::io, path.string() + " is not a version 1 task bank");
    LatentStructure s(j.at("structure").get<std::vector<std::size_t>>());
    std::vector<TaskSpec> tasks;
    for (const auto& t : j.at("tasks"))
      tasks.push_back({t.at("p").get<std::vector<double>>(), t.at("q").get<std::vector<double>>(),
                       t.at("prior").get<double>()});
    return TaskBank(std::move(s), std::move(tasks));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, "malformed task bank " + path.string() + ": " + e.what());
  }
}

}  // namespace wta::tasks
