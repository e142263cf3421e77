// Command-line front end; talks to the library only through the C interface.
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wta/wta.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct ConfigArgs {
  std::string config;
  std::string preset;
  std::string out;
  std::vector<std::uint64_t> seeds;
};

int report(wta_status status) {
  if (status == WTA_OK) return kExitOk;
  std::fprintf(stderr, "error (%s): %s\n", wta_status_name(status), wta_last_error());
  return status == WTA_INVALID_ARGUMENT || status == WTA_CONFIG_ERROR ? kExitUsage : kExitRuntime;
}

void print_summary(char* json) {
  if (!json) return;
  std::printf("%s\n", json);
  wta_string_free(json);
}

void add_config_options(CLI::App* cmd, ConfigArgs& a, bool with_seeds = true) {
  auto* group = cmd->add_option_group("source", "experiment configuration");
  group->add_option("--config", a.config, "experiment config file (JSON)")->check(CLI::ExistingFile);
  group->add_option("--preset", a.preset, "bundled preset name, e.g. matched-desk");
  group->require_option(1);
  cmd->add_option("--out", a.out, "run directory (overrides the config's output)");
  if (with_seeds) cmd->add_option("--seed", a.seeds, "run seed; repeat to run several (replaces the config's list)");
}

// Loads and adjusts the config; returns an exit code, 0 on success.
int load(const ConfigArgs& a, wta_config** config) {
  wta_status s = a.preset.empty() ? wta_config_load(a.config.c_str(), config)
                                   : wta_config_preset(a.preset.c_str(), config);
  if (s == WTA_OK && !a.out.empty()) s = wta_config_set_output(*config, a.out.c_str());
  if (s == WTA_OK && !a.seeds.empty()) s = wta_config_set_seeds(*config, a.seeds.data(), a.seeds.size());
  return report(s);
}

template <class F>
int with_config(const ConfigArgs& a, F&& run) {
  wta_config* config = nullptr;
  int code = load(a, &config);
  if (code == kExitOk) {
    char* summary = nullptr;
    code = report(run(config, &summary));
    print_summary(summary);
  }
  wta_config_free(config);
  return code;
}

void log_to_stderr(const char* message, void*) { std::fprintf(stderr, "%s\n", message); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-WTA bottleneck experiments: data generation, training, evaluation and benchmarks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", wta_version());
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress messages");

  ConfigArgs gen_args, train_args, eval_args, gen_bench_args;
  std::size_t train_jobs = 1, bench_jobs = 1;
  std::string eval_checkpoint, bench_checkpoint;

  auto* gen = app.add_subcommand("gen-data", "generate Phi, the task bank and the datasets");
  add_config_options(gen, gen_args, false);

  auto* train = app.add_subcommand("train", "train one model per seed");
  add_config_options(train, train_args);
  train->add_option("--jobs", train_jobs, "seeds trained concurrently")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "symbolic evaluation of trained checkpoints");
  add_config_options(eval, eval_args);
  eval->add_option("--checkpoint", eval_checkpoint, "evaluate only this checkpoint");

  auto* bench = app.add_subcommand("generalize", "compare readout MLPs on x and on the code");
  add_config_options(bench, gen_bench_args, false);
  bench->add_option("--checkpoint", bench_checkpoint, "encoder checkpoint (default: the config's encoder choice)");
  bench->add_option("--jobs", bench_jobs, "runs evaluated concurrently")->check(CLI::PositiveNumber);

  std::size_t m = 2, l_c = 2, trials = 10000;
  std::uint64_t theorem_seed = 0;
  std::string mode = "exhaustive", theorem_out = "runs/theorem";
  auto* theorem = app.add_subcommand("verify-theorem", "check that realizable code bijections are structured permutations");
  theorem->add_option("--m", m, "number of factors")->required();
  theorem->add_option("--lc", l_c, "categories per factor")->required();
  theorem->add_option("--mode", mode, "exhaustive or sampled")->check(CLI::IsMember({"exhaustive", "sampled"}));
  theorem->add_option("--trials", trials, "bijections drawn in sampled mode");
  theorem->add_option("--seed", theorem_seed, "sampler seed");
  theorem->add_option("--out", theorem_out, "output directory");

  std::string sprites_out = "runs/sprites";
  bool no_png = false;
  auto* sprites = app.add_subcommand("render-sprites", "render the sprite corpus and palette");
  sprites->add_option("--out", sprites_out, "output directory");
  sprites->add_flag("--no-png", no_png, "write only the corpus file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (!quiet) wta_set_log(log_to_stderr, nullptr);

  if (*gen) return with_config(gen_args, [](wta_config* c, char** s) { return wta_gen_data(c, s); });
  if (*train)
    return with_config(train_args, [&](wta_config* c, char** s) { return wta_train(c, train_jobs, s); });
  if (*eval)
    return with_config(eval_args, [&](wta_config* c, char** s) {
      return wta_eval(c, eval_checkpoint.empty() ? nullptr : eval_checkpoint.c_str(), s);
    });
  if (*bench)
    return with_config(gen_bench_args, [&](wta_config* c, char** s) {
      return wta_generalize(c, bench_checkpoint.empty() ? nullptr : bench_checkpoint.c_str(), bench_jobs, s);
    });
  if (*theorem) {
    char* out = nullptr;
    const int code =
        report(wta_verify_theorem(m, l_c, mode == "exhaustive", trials, theorem_seed, theorem_out.c_str(), &out));
    print_summary(out);
    return code;
  }
  if (*sprites) {
    char* out = nullptr;
    const int code = report(wta_render_sprites(sprites_out.c_str(), no_png ? 0 : 1, &out));
    print_summary(out);
    return code;
  }
  return kExitUsage;
}
