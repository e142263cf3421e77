#include "wta/generalization/generalization.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

#include "wta/error.hpp"
#include "wta/tasks/tasks.hpp"
#include "wta/train/metrics.hpp"

namespace wta::generalization {

using data::Category;
using data::LatentStructure;
using nn::Tensor2;

const char* split_kind_name(SplitKind k) {
  switch (k) {
    case SplitKind::random: return "random";
    case SplitKind::pair_of_categories: return "pair-of-categories";
    case SplitKind::constant_category: return "constant-category";
  }
  return "?";
}

SplitKind parse_split_kind(const std::string& name) {
  if (name == "random") return SplitKind::random;
  if (name == "pair-of-categories" || name == "pair") return SplitKind::pair_of_categories;
  if (name == "constant-category" || name == "constant") return SplitKind::constant_category;
  fail(ErrorCode::config, "unknown split kind '" + name + "'");
}

namespace {

nlohmann::json selector_json(const CategorySelector& c) { return {c.factor, c.category}; }

CategorySelector selector_from(const nlohmann::json& j, CategorySelector fallback) {
  if (j.is_null()) return fallback;
  require(j.is_array() && j.size() == 2, "category selector must be [factor, category]");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

bool matches(std::span<const Category> row, const CategorySelector& c) { return row[c.factor] == c.category; }

void check_selector(const LatentStructure& s, const CategorySelector& c) {
  require(c.factor < s.factors() && c.category < s.count(c.factor),
          "category selector (" + std::to_string(c.factor) + ", " + std::to_string(c.category) +
              ") lies outside the structure");
}

}  // namespace

nlohmann::json to_json(const SplitSpec& s) {
  nlohmann::json j{{"kind", split_kind_name(s.kind)}, {"seed", s.seed}};
  switch (s.kind) {
    case SplitKind::random:
      j["val_count"] = s.val_count;
      j["test_count"] = s.test_count;
      break;
    case SplitKind::pair_of_categories:
      j["test"] = {selector_json(s.test_a), selector_json(s.test_b)};
      j["val"] = {selector_json(s.val_a), selector_json(s.val_b)};
      break;
    case SplitKind::constant_category:
      j["train"] = selector_json(s.constant);
      j["val"] = selector_json(s.constant_val);
      break;
  }
  return j;
}

SplitSpec split_spec_from_json(const nlohmann::json& j) {
  SplitSpec s;
  s.kind = parse_split_kind(j.value("kind", std::string("random")));
  s.seed = j.value("seed", s.seed);
  s.val_count = j.value("val_count", s.val_count);
  s.test_count = j.value("test_count", s.test_count);
  if (s.kind == SplitKind::pair_of_categories) {
    if (j.contains("test")) {
      s.test_a = selector_from(j["test"].at(0), s.test_a);
      s.test_b = selector_from(j["test"].at(1), s.test_b);
    }
    if (j.contains("val")) {
      s.val_a = selector_from(j["val"].at(0), s.val_a);
      s.val_b = selector_from(j["val"].at(1), s.val_b);
    }
  } else if (s.kind == SplitKind::constant_category) {
    s.constant = selector_from(j.value("train", nlohmann::json()), s.constant);
    s.constant_val = selector_from(j.value("val", nlohmann::json()), s.constant_val);
  }
  return s;
}

Split make_split(const LatentStructure& s, std::span<const Category> categories, const SplitSpec& spec) {
  const std::size_t m = s.factors();
  require(m > 0 && categories.size() % m == 0, "category array does not match the structure");
  const std::size_t n = categories.size() / m;
  auto row = [&](std::size_t i) { return categories.subspan(i * m, m); };
  Split out;
  switch (spec.kind) {
    case SplitKind::random: {
      require(spec.val_count + spec.test_count < n, "random split needs more samples than val + test");
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      nn::Rng rng = nn::Rng(spec.seed).split(0x73706c6974);  // "split"
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      out.val.assign(order.begin(), order.begin() + spec.val_count);
      out.test.assign(order.begin() + spec.val_count, order.begin() + spec.val_count + spec.test_count);
      out.train.assign(order.begin() + spec.val_count + spec.test_count, order.end());
      for (auto* part : {&out.train, &out.val, &out.test}) std::sort(part->begin(), part->end());
      break;
    }
    case SplitKind::pair_of_categories: {
      require(m >= 2, "pair-of-categories split needs two factors");
      for (const auto& c : {spec.test_a, spec.test_b, spec.val_a, spec.val_b}) check_selector(s, c);
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = row(i);
        if (matches(r, spec.test_a) && matches(r, spec.test_b)) out.test.push_back(i);
        else if (matches(r, spec.val_a) && matches(r, spec.val_b)) out.val.push_back(i);
        else out.train.push_back(i);
      }
      break;
    }
    case SplitKind::constant_category: {
      check_selector(s, spec.constant);
      check_selector(s, spec.constant_val);
      require(spec.constant.factor == spec.constant_val.factor && spec.constant.category != spec.constant_val.category,
              "constant-category split needs two categories of one factor");
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = row(i);
        if (matches(r, spec.constant)) out.train.push_back(i);
        else if (matches(r, spec.constant_val)) out.val.push_back(i);
        else out.test.push_back(i);
      }
      break;
    }
  }
  require(!out.train.empty() && !out.val.empty() && !out.test.empty(), "split produced an empty part");
  return out;
}

Split make_split(const LatentStructure& s, const SplitSpec& spec) {
  const auto c = data::enumerate_code_matrix(s);
  return make_split(s, c.categories, spec);
}

bool is_partition(const Split& split, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto* part : {&split.train, &split.val, &split.test})
    for (auto i : *part) {
      if (i >= n || seen[i]) return false;
      seen[i] = 1;
    }
  return std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; });
}

namespace {

double log_uniform(nn::Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

template <class T>
const T& pick(nn::Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

template <class T>
bool one_of(const std::vector<T>& v, const T& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

ReadoutConfig HpoSpace::sample(nn::Rng& rng) const {
  ReadoutConfig c;
  c.hidden_dim = pick(rng, hidden_dims);
  c.hidden_layers = min_layers + rng.below(max_layers - min_layers + 1);
  c.dropout = pick(rng, dropouts);
  c.layernorm = rng.below(2) == 1;
  c.learning_rate = log_uniform(rng, lr_min, lr_max);
  c.weight_decay = log_uniform(rng, wd_min, wd_max);
  c.batch_size = pick(rng, batch_sizes);
  return c;
}

bool HpoSpace::contains(const ReadoutConfig& c) const {
  return one_of(hidden_dims, c.hidden_dim) && c.hidden_layers >= min_layers && c.hidden_layers <= max_layers &&
         one_of(dropouts, c.dropout) && c.learning_rate >= lr_min && c.learning_rate <= lr_max &&
         c.weight_decay >= wd_min && c.weight_decay <= wd_max && one_of(batch_sizes, c.batch_size);
}

HpoResult hpo_search(const HpoSpace& space, const HpoOptions& options, const Tensor2& x_train,
                     const Tensor2& t_train, const Tensor2& x_val, const Tensor2& t_val, std::uint64_t seed) {
  require(options.trials > 0, "HPO needs at least one trial");
  nn::Rng rng = nn::Rng(seed).split(0x68706f);  // "hpo"
  HpoResult result;
  result.best_val_loss = INFINITY;
  for (std::size_t t = 0; t < options.trials; ++t) {
    HpoTrial trial{space.sample(rng), {}};
    nn::Rng fit_rng = rng.split(t);
    ReadoutMlp model(x_train.cols(), trial.config, fit_rng.next_u64());
    trial.fit = fit_readout(model, x_train, t_train, x_val, t_val, options.fit, fit_rng);
    if (trial.fit.best_val_loss < result.best_val_loss) {
      result.best_val_loss = trial.fit.best_val_loss;
      result.best = trial.config;
    }
    result.trials.push_back(trial);
  }
  return result;
}

std::pair<double, double> mean_sd(std::span<const double> values) {
  if (values.empty()) return {NAN, NAN};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

namespace {

bool both_classes(const Tensor2& targets, std::span<const std::size_t> rows) {
  bool pos = false, neg = false;
  for (auto r : rows) (targets(r, 0) >= train::kDichotomizeThreshold ? pos : neg) = true;
  return pos && neg;
}

std::optional<double> auc_on(const ReadoutMlp& model, const Tensor2& x, const Tensor2& t) {
  return train::task_auc(model.predict(x), t, 0);
}

RunScore evaluate_representation(const Tensor2& inputs, const Tensor2& targets, std::span<const std::size_t> train_rows,
                                 const Split& split, const ComparisonOptions& options, std::uint64_t seed) {
  const Tensor2 xt = inputs.gather_rows(train_rows), tt = targets.gather_rows(train_rows);
  const Tensor2 xv = inputs.gather_rows(split.val), tv = targets.gather_rows(split.val);
  const Tensor2 xs = inputs.gather_rows(split.test), ts = targets.gather_rows(split.test);

  auto hpo = hpo_search(options.space, options.hpo, xt, tt, xv, tv, seed);
  nn::Rng rng = nn::Rng(seed).split(0x66696e616c);  // "final"
  ReadoutMlp model(inputs.cols(), hpo.best, rng.next_u64());
  fit_readout(model, xt, tt, xv, tv, options.hpo.fit, rng);
  RunScore score;
  score.train_auc = auc_on(model, xt, tt);
  score.test_auc = auc_on(model, xs, ts);
  score.chosen = hpo.best;
  score.trials = std::move(hpo.trials);
  return score;
}

}  // namespace

ComparisonReport run_comparison(const LatentStructure& s, const Tensor2& z, const Tensor2& x, const Tensor2& z_hat,
                                const Split& split, const ComparisonOptions& options, const std::string& split_name) {
  const std::size_t n = z.rows();
  require(x.rows() == n && z_hat.rows() == n, "z, x and z_hat must be row aligned");
  require(z.cols() == s.total_categories(), "latent width does not match the structure");
  require(is_partition(split, n), "split is not a partition of the samples");
  require(!options.seeds.empty() && !options.train_sizes.empty(), "need at least one seed and one size");

  ComparisonReport report;
  report.split = split_name;
  tasks::TaskOptions task_opts{options.irrelevant_factors};
  for (std::size_t size : options.train_sizes) require(size > 0, "training size must be positive");

  // Every (size, seed) run is independent, so they may execute in any order.
  auto run_one = [&](std::size_t size, std::uint64_t seed) {
    // A fresh task per seed; redraw until train subset and test contain both classes.
    nn::Rng rng = nn::Rng(seed).split(0x67656e6572616c);  // "general"
    SeedResult run;
    run.train_size = size;
    run.seed = seed;
    Tensor2 targets;
    std::vector<std::size_t> rows;
    for (;;) {
      require(run.task_draws < options.max_task_draws, "could not draw a task with two classes on the split");
      ++run.task_draws;
      const auto bank = tasks::sample_task_bank(s, 1, rng, task_opts);
      targets = tasks::posterior(bank, z);
      rows = split.train;
      if (size < rows.size()) {
        for (std::size_t i = 0; i < size; ++i) std::swap(rows[i], rows[i + rng.below(rows.size() - i)]);
        rows.resize(size);
      }
      if (both_classes(targets, rows) && both_classes(targets, split.test)) break;
    }
    const std::uint64_t hpo_seed = nn::mix64(seed * 0x9e3779b97f4a7c15ULL + size);
    run.x = evaluate_representation(x, targets, rows, split, options, hpo_seed);
    run.z_hat = evaluate_representation(z_hat, targets, rows, split, options, hpo_seed);
    return run;
  };

  const std::size_t total = options.train_sizes.size() * options.seeds.size();
  report.runs.resize(total);
  std::vector<std::exception_ptr> errors(total);
  auto job = [&](std::size_t k) {
    try {
      report.runs[k] = run_one(options.train_sizes[k / options.seeds.size()], options.seeds[k % options.seeds.size()]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.jobs, 1, total);
  if (workers == 1) {
    for (std::size_t k = 0; k < total; ++k) job(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k; (k = next++) < total;) job(k);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t size : options.train_sizes) {
    SummaryRow row;
    row.train_size = size;
    std::vector<double> trx, trz, tex, tez;
    for (const auto& r : report.runs) {
      if (r.train_size != size) continue;
      if (r.x.train_auc) trx.push_back(*r.x.train_auc);
      if (r.z_hat.train_auc) trz.push_back(*r.z_hat.train_auc);
      if (r.x.test_auc) tex.push_back(*r.x.test_auc);
      if (r.z_hat.test_auc) tez.push_back(*r.z_hat.test_auc);
    }
    std::tie(row.train_mean_x, row.train_sd_x) = mean_sd(trx);
    std::tie(row.train_mean_z, row.train_sd_z) = mean_sd(trz);
    std::tie(row.test_mean_x, row.test_sd_x) = mean_sd(tex);
    std::tie(row.test_mean_z, row.test_sd_z) = mean_sd(tez);
    report.rows.push_back(row);
  }
  return report;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

nlohmann::json score_json(const RunScore& s) {
  auto trials = nlohmann::json::array();
  for (const auto& t : s.trials)
    trials.push_back({{"config", to_json(t.config)},
                      {"best_val_loss", t.fit.best_val_loss},
                      {"best_epoch", t.fit.best_epoch},
                      {"epochs_run", t.fit.epochs_run}});
  return {{"train_auc", optional_json(s.train_auc)},
          {"test_auc", optional_json(s.test_auc)},
          {"chosen", to_json(s.chosen)},
          {"trials", trials}};
}

}  // namespace

nlohmann::json to_json(const ComparisonReport& r) {
  auto runs = nlohmann::json::array();
  for (const auto& run : r.runs)
    runs.push_back({{"train_size", run.train_size},
                    {"seed", run.seed},
                    {"task_draws", run.task_draws},
                    {"x", score_json(run.x)},
                    {"z_hat", score_json(run.z_hat)}});
  auto rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"train_size", row.train_size},
                    {"train", {{"mean_x", row.train_mean_x}, {"sd_x", row.train_sd_x},
                               {"mean_z_hat", row.train_mean_z}, {"sd_z_hat", row.train_sd_z}}},
                    {"test", {{"mean_x", row.test_mean_x}, {"sd_x", row.test_sd_x},
                              {"mean_z_hat", row.test_mean_z}, {"sd_z_hat", row.test_sd_z}}}});
  return {{"split", r.split}, {"summary", rows}, {"runs", runs}};
}

void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& r) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string());
  out << "train_samples,train_mean_x,train_sd_x,train_mean_z_hat,train_sd_z_hat,"
         "test_mean_x,test_sd_x,test_mean_z_hat,test_sd_z_hat\n";
  char buf[256];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", row.train_size,
                  row.train_mean_x, row.train_sd_x, row.train_mean_z, row.train_sd_z, row.test_mean_x,
                  row.test_sd_x, row.test_mean_z, row.test_sd_z);
    out << buf;
  }
  if (!out) fail(ErrorCode::io, "write failed on " + path.string());
}

}  // namespace wta::generalization
