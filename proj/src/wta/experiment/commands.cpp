#include "wta/experiment/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "wta/error.hpp"
#include "wta/generalization/generalization.hpp"
#include "wta/model/predictor.hpp"
#include "wta/nn/rng.hpp"
#include "wta/symbolic/symbolic.hpp"
#include "wta/train/metrics.hpp"
#include "wta/train/trainer.hpp"
#include "wta/vision/sprites.hpp"

namespace wta::experiment {

namespace fs = std::filesystem;
using nn::Tensor2;

namespace {

constexpr const char* kVersion = "1.0.0";

using Clock = std::chrono::steady_clock;

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::io, "write failed on " + path.string());
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) fail(ErrorCode::io, "cannot create " + p.string() + ": " + ec.message());
}

// Identifies the experiment independently of where its outputs go.
std::string content_hash(nlohmann::json config) {
  if (config.is_object()) config.erase("output");
  return train::config_hash(config);
}

// The manifest is the only output allowed to differ between identical runs.
void write_manifest(const fs::path& dir, const std::string& command, const nlohmann::json& config,
                    const std::vector<fs::path>& files, const nlohmann::json& summary, double wall) {
  auto listed = nlohmann::json::array();
  for (const auto& f : files)
    listed.push_back({{"path", fs::relative(f, dir).generic_string()},
                      {"bytes", fs::file_size(f)},
                      {"digest", file_digest(f)}});
  write_json(dir / "manifest.json", {{"command", command},
                                     {"version", kVersion},
                                     {"config_hash", content_hash(config)},
                                     {"config", config},
                                     {"files", listed},
                                     {"summary", summary},
                                     {"wall_seconds", wall}});
}

bool uses_corpus(const ExperimentConfig& c) { return c.setup == Setup::dsprites; }

std::uint64_t phi_seed(const ExperimentConfig& c) { return nn::Rng(c.data_seed).split(1).next_u64(); }

}  // namespace

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

fs::path data_dir(const ExperimentConfig& c) { return c.output / "data"; }

fs::path seed_dir(const ExperimentConfig& c, std::uint64_t seed) {
  return c.output / ("seed-" + std::to_string(seed));
}

nlohmann::json gen_data(const ExperimentConfig& c, const Logger& log) {
  c.validate();
  const auto started = Clock::now();
  const fs::path dir = data_dir(c);
  ensure_dir(dir);
  nn::Rng root(c.data_seed);
  nn::Rng task_rng = root.split(2), sample_rng = root.split(3);
  std::vector<fs::path> files;
  nlohmann::json summary;

  const auto bank =
      tasks::sample_task_bank(c.structure, c.predictor.tasks, task_rng, tasks::TaskOptions{c.irrelevant_factors});
  summary["latent_dim"] = c.structure.total_categories();
  summary["tasks"] = bank.size();
  summary["task_rank"] = bank.rank();
  summary["full_column_rank"] = bank.full_column_rank();
  say(log, "sampled " + std::to_string(bank.size()) + " tasks, rank of W = " + std::to_string(bank.rank()));

  if (uses_corpus(c)) {
    const auto corpus = vision::build_corpus(vision::build_palette());
    files.push_back(dir / "corpus.bin");
    data::write_dataset(files.back(), corpus);
    summary["samples"] = corpus.count();
    summary["input_dim"] = corpus.input_dim();
  } else {
    const data::LatentStructure full = c.confounders ? c.structure.concat(*c.confounders) : c.structure;
    const std::uint64_t base = phi_seed(c);
    std::optional<data::EntanglementMap> phi;
    data::Dataset train, test;
    std::uint32_t attempts = 0;
    bool exhaustive = false;
    for (std::uint32_t k = 0; k < 16 && !phi; ++k) {
      auto built = data::build_injective_entanglement(full, c.phi, k == 0 ? base : nn::mix64(base + k));
      attempts += built.attempts;
      exhaustive = built.exhaustive;
      nn::Rng rng = sample_rng;
      train = data::make_dataset(c.structure, built.map, c.train_samples, rng, c.confounders);
      test = data::make_dataset(c.structure, built.map, c.test_samples, rng, c.confounders);
      if (!exhaustive && data::find_collision(train.onehots(), train.x)) continue;
      phi = std::move(built.map);
    }
    if (!phi) fail(ErrorCode::internal, "no injective entanglement found in 16 draws");
    summary["phi_attempts"] = attempts;
    summary["phi_injectivity"] = exhaustive ? "exhaustive" : "sampled";

    files.push_back(dir / "phi.bin");
    data::write_entanglement(files.back(), *phi);
    files.push_back(dir / "train.bin");
    data::write_dataset(files.back(), train);
    files.push_back(dir / "test.bin");
    data::write_dataset(files.back(), test);
    if (!c.confounders && c.structure.combinations() <= data::kDefaultEnumerationCap) {
      files.push_back(dir / "eval.bin");
      data::write_dataset(files.back(), data::enumerate_dataset(c.structure, *phi));
      summary["eval"] = "enumerated";
    } else {
      summary["eval"] = "test set";
    }
    summary["train_samples"] = train.count();
    summary["test_samples"] = test.count();
    summary["input_dim"] = train.input_dim();
  }
  files.push_back(dir / "tasks.json");
  tasks::write_task_bank(files.back(), bank);
  write_manifest(dir, "gen-data", to_json(c), files, summary, seconds_since(started));
  say(log, "wrote " + std::to_string(files.size()) + " files to " + dir.string());
  return summary;
}

ExperimentData load_data(const ExperimentConfig& c) {
  const fs::path dir = data_dir(c);
  if (!fs::exists(dir / "tasks.json"))
    fail(ErrorCode::io, "no generated data in " + dir.string() + "; run gen-data first");
  ExperimentData d;
  d.bank = tasks::read_task_bank(dir / "tasks.json");
  if (!(d.bank.structure() == c.structure) || d.bank.size() != c.predictor.tasks)
    fail(ErrorCode::config, "task bank in " + dir.string() + " does not match the config");
  if (uses_corpus(c)) {
    d.eval = data::read_dataset(dir / "corpus.bin");
    const auto split = vision::make_vision_split(d.eval);
    d.train = d.eval.subset(split.train);
    d.test = d.eval.subset(split.test);
    d.eval_exhaustive = true;
  } else {
    d.train = data::read_dataset(dir / "train.bin");
    d.test = data::read_dataset(dir / "test.bin");
    if (fs::exists(dir / "eval.bin")) {
      d.eval = data::read_dataset(dir / "eval.bin");
      d.eval_exhaustive = true;
    } else {
      d.eval = d.test;
    }
  }
  if (d.train.input_dim() != c.input_dim())
    fail(ErrorCode::config, "stored inputs have width " + std::to_string(d.train.input_dim()) + ", config expects " +
                                std::to_string(c.input_dim()));
  return d;
}

nlohmann::json train_runs(const ExperimentConfig& c, std::size_t jobs, const Logger& log) {
  c.validate();
  const auto data = load_data(c);
  const Tensor2 t_train = tasks::label_dataset(data.bank, data.train);
  const Tensor2 t_test = tasks::label_dataset(data.bank, data.test);
  const nlohmann::json config_json = to_json(c);

  std::mutex log_mutex;
  auto locked_log = [&](const std::string& msg) {
    std::lock_guard lock(log_mutex);
    say(log, msg);
  };

  std::vector<nlohmann::json> results(c.seeds.size());
  std::vector<std::exception_ptr> errors(c.seeds.size());
  auto run_one = [&](std::size_t i) {
    const std::uint64_t seed = c.seeds[i];
    try {
      const auto started = Clock::now();
      const fs::path dir = seed_dir(c, seed);
      ensure_dir(dir);
      model::WtaPredictor model(c.predictor, seed);
      train::TrainConfig tc = c.train;
      tc.seed = seed;
      const std::size_t every = std::max<std::size_t>(1, tc.epochs / 10);
      auto record = train::train(model, {data.train.x, t_train, data.test.x, t_test}, tc,
                                 [&](std::size_t epoch, double loss) {
                                   if ((epoch + 1) % every == 0 || epoch + 1 == tc.epochs) {
                                     char buf[128];
                                     std::snprintf(buf, sizeof buf, "seed %llu epoch %zu/%zu loss %.6g",
                                                   static_cast<unsigned long long>(seed), epoch + 1, tc.epochs, loss);
                                     locked_log(buf);
                                   }
                                 });
      record.config_hash = content_hash(config_json);
      nlohmann::json rec = train::to_json(record);
      rec["solved"] = record.test_mae < c.mae_threshold;
      rec["mae_threshold"] = c.mae_threshold;

      std::vector<fs::path> files{dir / "model.ckpt", dir / "run_record.json", dir / "loss.csv"};
      model::write_checkpoint(files[0], model,
                              {{"seed", seed}, {"setup", setup_name(c.setup)}, {"config_hash", record.config_hash}});
      write_json(files[1], rec);
      train::write_loss_csv(files[2], record);
      write_manifest(dir, "train", config_json, files,
                     {{"seed", seed}, {"test_mae", record.test_mae}, {"batch_size", tc.batch_size},
                      {"train_wall_seconds", record.wall_seconds}},
                     seconds_since(started));
      char buf[128];
      std::snprintf(buf, sizeof buf, "seed %llu done: test MAE %.3g", static_cast<unsigned long long>(seed),
                    record.test_mae);
      locked_log(buf);
      results[i] = {{"seed", seed}, {"test_mae", record.test_mae}, {"solved", rec["solved"]},
                    {"checkpoint", files[0].string()}};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  jobs = std::clamp<std::size_t>(jobs, 1, c.seeds.size());
  if (jobs == 1) {
    for (std::size_t i = 0; i < c.seeds.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < c.seeds.size();) run_one(i);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return {{"runs", results}};
}

namespace {

struct LoadedModel {
  model::WtaPredictor model;
  fs::path path;
};

LoadedModel load_model(const ExperimentConfig& c, const fs::path& path) {
  auto ckpt = model::read_checkpoint(path);
  const auto& pc = ckpt.model.config();
  if (pc.encoder_dims != c.predictor.encoder_dims || pc.heads.sizes != c.predictor.heads.sizes ||
      pc.tasks != c.predictor.tasks)
    fail(ErrorCode::config, "checkpoint " + path.string() + " does not match the config's model");
  return {std::move(ckpt.model), path};
}

std::vector<fs::path> checkpoints_for(const ExperimentConfig& c, const std::optional<fs::path>& explicit_path) {
  if (explicit_path) return {*explicit_path};
  std::vector<fs::path> out;
  for (auto s : c.seeds) out.push_back(seed_dir(c, s) / "model.ckpt");
  return out;
}

nlohmann::json evaluate_one(const ExperimentConfig& c, const ExperimentData& data, const LoadedModel& m,
                            const fs::path& dir) {
  const auto started = Clock::now();
  ensure_dir(dir);
  const Tensor2 z = data.eval.onehots();
  const Tensor2 z_hat = m.model.encode(data.eval.x);
  const auto& heads = c.predictor.heads.sizes;
  auto verdict = symbolic::check_symbolic(c.structure, z, z_hat, heads, data.eval_exhaustive);
  const auto table = symbolic::build_activation_table(c.structure, z, z_hat);

  nlohmann::json out = symbolic::to_json(verdict);
  out["head_assignment"] = symbolic::assign_heads(table, heads);
  out["head_assignment_note"] = "heuristic";

  const Tensor2 y = m.model.predict(data.test.x);
  out["test_mae"] = train::mae(y, tasks::label_dataset(data.bank, data.test));

  const std::vector<std::size_t> counts(c.structure.counts().begin(), c.structure.counts().end());
  std::vector<fs::path> files{dir / "verdict.json", dir / "activation.csv"};
  nlohmann::json permutation;
  if (data.eval_exhaustive && !c.confounders && heads == counts && c.setup != Setup::dsprites) {
    const auto code = data::enumerate_code_matrix(c.structure);
    auto r = symbolic::recover_structured_permutation(code, z_hat);
    out["structured_permutation"] = r.has_value();
    if (r) permutation = theory::to_json(*r);
    // Readout consistency: W_out z_hat against the task logits W z.
    const auto trace = m.model.evaluate(data.eval.x);
    const Tensor2 target = nn::matmul_transposed(z, data.bank.w_folded());
    double worst = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i)
      worst = std::max(worst, std::abs(trace.logits.values()[i] - target.values()[i]));
    out["max_logit_error"] = worst;
    if (data.bank.full_column_rank())
      out["readout_cross_check"] =
          symbolic::readout_cross_check(code.rows, z_hat, data.bank.w_folded(), m.model.readout().value);
  }
  write_json(files[0], out);
  symbolic::write_activation_csv(files[1], table);
  if (!permutation.is_null()) {
    files.push_back(dir / "permutation.json");
    write_json(files.back(), permutation);
  }
  write_manifest(dir, "eval", to_json(c), files,
                 {{"checkpoint", m.path.string()}, {"overall", verdict.overall}}, seconds_since(started));
  return out;
}

}  // namespace

nlohmann::json evaluate(const ExperimentConfig& c, const std::optional<fs::path>& checkpoint, const Logger& log) {
  c.validate();
  const auto data = load_data(c);
  auto results = nlohmann::json::array();
  for (const auto& path : checkpoints_for(c, checkpoint)) {
    if (!fs::exists(path)) fail(ErrorCode::io, "missing checkpoint " + path.string());
    const auto m = load_model(c, path);
    const fs::path dir = path.parent_path() / "eval";
    auto out = evaluate_one(c, data, m, dir);
    say(log, path.string() + ": symbolic " + (out["overall"].get<bool>() ? "yes" : "no") + ", " +
                 std::to_string(out["symbolic_categories"].get<std::size_t>()) + "/" +
                 std::to_string(c.structure.total_categories()) + " categories, " +
                 std::to_string(out["localized_factors"].get<std::size_t>()) + " localized factors");
    results.push_back({{"checkpoint", path.string()},
                       {"overall", out["overall"]},
                       {"symbolic_categories", out["symbolic_categories"]},
                       {"localized_factors", out["localized_factors"]},
                       {"test_mae", out["test_mae"]},
                       {"structured_permutation", out.value("structured_permutation", false)}});
  }
  return {{"evaluations", results}};
}

nlohmann::json generalize(const ExperimentConfig& c, const std::optional<fs::path>& checkpoint, std::size_t jobs,
                          const Logger& log) {
  c.validate();
  const auto started = Clock::now();
  const auto data = load_data(c);
  if (!data.eval_exhaustive) fail(ErrorCode::config, "the generalization benchmark needs an enumerable latent space");
  const auto& g = c.generalize;

  const Tensor2 z = data.eval.onehots();
  Tensor2 z_hat;
  std::string encoder = "ideal";
  if (g.encoder == EncoderChoice::ideal && !checkpoint) {
    z_hat = z;
  } else {
    const fs::path path = checkpoint ? *checkpoint : seed_dir(c, c.seeds.front()) / "model.ckpt";
    if (!fs::exists(path)) fail(ErrorCode::io, "missing checkpoint " + path.string());
    z_hat = load_model(c, path).model.encode(data.eval.x);
    encoder = "trained";
  }

  generalization::Split split;
  std::string split_name;
  generalization::ComparisonOptions opts;
  if (c.setup == Setup::dsprites) {
    split = vision::make_vision_split(data.eval);
    split_name = "dsprites-pair-of-categories";
  } else {
    split = generalization::make_split(c.structure, data.eval.categories, g.split);
    split_name = generalization::split_kind_name(g.split.kind);
    if (g.split.kind == generalization::SplitKind::constant_category) opts.irrelevant_factors = {g.split.constant.factor};
  }
  opts.train_sizes = g.train_sizes;
  opts.seeds = g.seeds;
  opts.hpo.trials = g.trials;
  opts.hpo.fit = {g.max_epochs, g.patience};
  opts.jobs = jobs;
  say(log, "generalization on " + split_name + " split: train " + std::to_string(split.train.size()) + ", val " +
               std::to_string(split.val.size()) + ", test " + std::to_string(split.test.size()) + ", encoder " +
               encoder);

  const auto report = generalization::run_comparison(c.structure, z, data.eval.x, z_hat, split, opts, split_name);
  const fs::path dir = c.output / "generalize" / (split_name + "-" + encoder);
  ensure_dir(dir);
  std::vector<fs::path> files{dir / "report.json", dir / "report.csv"};
  auto j = generalization::to_json(report);
  j["encoder"] = encoder;
  j["split_sizes"] = {split.train.size(), split.val.size(), split.test.size()};
  write_json(files[0], j);
  generalization::write_comparison_csv(files[1], report);
  for (const auto& row : report.rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "n=%zu test AUC x %.3f +- %.3f, z_hat %.3f +- %.3f", row.train_size,
                  row.test_mean_x, row.test_sd_x, row.test_mean_z, row.test_sd_z);
    say(log, buf);
  }
  write_manifest(dir, "generalize", to_json(c), files, {{"split", split_name}, {"encoder", encoder}},
                 seconds_since(started));
  return j["summary"];
}

nlohmann::json verify_theorem(std::size_t m, std::size_t l_c, const theory::TheoremOptions& options,
                              const fs::path& out, const Logger& log) {
  const auto started = Clock::now();
  const auto report = theory::verify_theorem1(m, l_c, options);
  ensure_dir(out);
  const char* mode = options.mode == theory::TheoremMode::exhaustive ? "exhaustive" : "sampled";
  const fs::path file = out / ("theorem-" + std::to_string(m) + "x" + std::to_string(l_c) + "-" + mode + ".json");
  const auto j = theory::to_json(report);
  write_json(file, j);
  write_manifest(out, "verify-theorem",
                 {{"m", m}, {"l_c", l_c}, {"mode", mode}, {"trials", options.trials}, {"seed", options.seed}}, {file},
                 {{"holds", report.holds()}}, seconds_since(started));
  say(log, std::to_string(report.bijections_tested) + " bijections, " + std::to_string(report.realizable) +
               " realizable, " + std::to_string(report.structured) + " structured, " +
               std::to_string(report.violations) + " violations");
  return j;
}

nlohmann::json render_sprites(const fs::path& out, bool write_pngs, const Logger& log) {
  const auto started = Clock::now();
  ensure_dir(out);
  const auto palette = vision::build_palette();
  const auto corpus = vision::build_corpus(palette);
  std::vector<fs::path> files{out / "corpus.bin", out / "palette.json"};
  data::write_dataset(files[0], corpus);
  auto pal = nlohmann::json::array();
  for (const auto& rgb : palette) pal.push_back({rgb[0], rgb[1], rgb[2]});
  write_json(files[1], pal);
  if (write_pngs) {
    ensure_dir(out / "png");
    const char* shapes[] = {"rectangle", "ellipse", "heart"};
    for (std::size_t i = 0; i < corpus.count(); ++i) {
      const auto c = corpus.categories_of(i);
      char name[96];
      std::snprintf(name, sizeof name, "%04zu_%s_x%u_y%u_c%u.png", i, shapes[c[0]], unsigned{c[1]}, unsigned{c[2]},
                    unsigned{c[3]});
      vision::write_png(out / "png" / name, corpus.x.row(i));
    }
  }
  const auto split = vision::make_vision_split(corpus);
  nlohmann::json summary{{"images", corpus.count()},
                         {"min_palette_linf", vision::min_linf_distance(palette)},
                         {"split", {split.train.size(), split.val.size(), split.test.size()}}};
  write_manifest(out, "render-sprites", {{"palette", pal}}, files, summary, seconds_since(started));
  say(log, "rendered " + std::to_string(corpus.count()) + " sprites into " + out.string());
  return summary;
}

}  // namespace wta::experiment
