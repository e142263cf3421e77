// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails.
//
// usage: wta_acceptance <scratch dir> [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "support/check.hpp"
#include "wta/data/dataset.hpp"
#include "wta/data/latent.hpp"
#include "wta/experiment/commands.hpp"
#include "wta/experiment/config.hpp"
#include "wta/model/predictor.hpp"
#include "wta/nn/layers.hpp"
#include "wta/nn/ops.hpp"
#include "wta/symbolic/symbolic.hpp"
#include "wta/tasks/tasks.hpp"
#include "wta/theory/structured.hpp"
#include "wta/vision/sprites.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wta;
using nn::Tensor2;
using wta::testing::contract;
using wta::testing::numeric_gradient;
using wta::testing::random_tensor;
using wta::testing::relative_error;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_scratch;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void log_line(const std::string& msg) { std::fprintf(stderr, "  %s\n", msg.c_str()); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// A bundled preset with edits applied to its JSON form.
experiment::ExperimentConfig preset(const std::string& name, const fs::path& out,
                                    const std::function<void(json&)>& edit = {}) {
  json j = experiment::to_json(experiment::load_config(experiment::preset_path(name, WTA_PRESET_DIR)));
  j["output"] = out.string();
  if (edit) edit(j);
  return experiment::config_from_json(j);
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// 1. Realizable code bijections are exactly the structured permutations.
Outcome theorem_counts() {
  const auto started = std::chrono::steady_clock::now();
  const auto a = theory::verify_theorem1(2, 2);
  const auto b = theory::verify_theorem1(3, 2);
  const double secs = seconds_since(started);
  const bool pass = a.realizable == 8 && b.realizable == 48 && a.violations == 0 && b.violations == 0 && secs < 300;
  return {pass, fmt("(2,2): %llu realizable, %llu violations; (3,2): %llu realizable, %llu violations; %.1f s",
                    (unsigned long long)a.realizable, (unsigned long long)a.violations,
                    (unsigned long long)b.realizable, (unsigned long long)b.violations, secs)};
}

// Posterior by Bayes' rule, written out independently of the library.
double bayes_by_hand(const tasks::TaskSpec& t, const data::LatentStructure& s, std::span<const data::Category> k) {
  double like1 = t.prior, like0 = 1.0 - t.prior;
  for (std::size_t f = 0; f < s.factors(); ++f) {
    like1 *= t.p[s.offset(f) + k[f]];
    like0 *= t.q[s.offset(f) + k[f]];
  }
  return like1 / (like1 + like0);
}

// 2. Posterior exactness and bias folding.
Outcome posterior_exactness() {
  const std::vector<data::LatentStructure> structures{data::LatentStructure({2, 2}),
                                                      data::LatentStructure({5, 5, 5, 5, 5}),
                                                      data::LatentStructure({5, 8, 5, 3, 9})};
  nn::Rng rng(2024);
  double worst_posterior = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto& s = structures[i % 3];
    const auto bank = tasks::sample_task_bank(s, 1, rng);
    const auto z = data::sample_latent(s, rng);
    const double got = tasks::posterior(bank, z.onehot)[0];
    const double expect = bayes_by_hand(bank.tasks()[0], s, z.categories);
    worst_posterior = std::max({worst_posterior, std::abs(got - expect),
                                std::abs(tasks::bayes_oracle(bank.tasks()[0], z.onehot) - expect)});
  }
  double worst_fold = 0.0;
  std::size_t rows = 0;
  for (const auto& s : structures) {
    const auto bank = tasks::sample_task_bank(s, 10, rng);
    const auto code = data::enumerate_code_matrix(s);
    for (std::size_t r = 0; r < code.size(); ++r, ++rows)
      for (std::size_t t = 0; t < bank.size(); ++t) {
        double folded = 0.0, unfolded = bank.bias()[t];
        for (std::size_t j = 0; j < s.total_categories(); ++j) {
          folded += bank.w_folded()(t, j) * code.rows(r, j);
          unfolded += bank.w_unfolded()(t, j) * code.rows(r, j);
        }
        worst_fold = std::max(worst_fold, std::abs(folded - unfolded) / std::max(1.0, std::abs(unfolded)));
      }
  }
  return {worst_posterior < 1e-12 && worst_fold < 1e-12,
          fmt("max |posterior - Bayes| = %.2e over 1000 pairs; max folding error = %.2e over %zu latent vectors",
              worst_posterior, worst_fold, rows)};
}

template <class L>
double layer_error(L& layer, std::size_t in, std::size_t out, nn::Rng& rng) {
  Tensor2 x = random_tensor(4, in, rng);
  for (double& v : x.values())
    if (std::abs(v) < 1e-3) v = 0.5;  // keep away from the leaky relu kink
  const Tensor2 g = random_tensor(4, out, rng);
  std::vector<nn::Parameter*> params;
  layer.collect(params);
  for (auto* p : params) p->zero_grad();
  layer.forward(x, {nn::Mode::train, nullptr});
  const Tensor2 dx = layer.backward(g);
  auto loss = [&] { return contract(layer.infer(x), g); };
  double worst = relative_error(dx.values(), numeric_gradient(x.values(), loss));
  for (auto* p : params) worst = std::max(worst, relative_error(p->grad.values(), numeric_gradient(p->value.values(), loss)));
  return worst;
}

// 3. Finite-difference gradient checks.
Outcome gradient_suite() {
  nn::Rng rng(3);
  double lin = 0, relu = 0, norm = 0, bce = 0, st = 0, e2e = 0;
  for (int trial = 0; trial < 20; ++trial) {
    nn::Linear linear(5, 4, true, rng);
    lin = std::max(lin, layer_error(linear, 5, 4, rng));
    nn::LeakyRelu act(0.01);
    relu = std::max(relu, layer_error(act, 6, 6, rng));
    nn::LayerNorm ln(6);
    norm = std::max(norm, layer_error(ln, 6, 6, rng));

    Tensor2 z = random_tensor(3, 4, rng, -3, 3);
    const Tensor2 t = random_tensor(3, 4, rng, 0, 1);
    bce = std::max(bce, relative_error(nn::bce_with_logits(z, t).grad.values(),
                                       numeric_gradient(z.values(), [&] { return nn::bce_with_logits(z, t).loss; })));

    std::vector<double> a(5), u(5);
    for (auto& v : a) v = rng.uniform(-2, 2);
    for (auto& v : u) v = rng.uniform(-1, 1);
    const double tau = rng.uniform(0.5, 5.0);
    const auto grad = model::gumbel_st_backward(u, model::gumbel_st_forward(a, tau, nullptr, false).soft, tau);
    auto soft_loss = [&] {
      const auto s = model::gumbel_st_forward(a, tau, nullptr, false).soft;
      double l = 0.0;
      for (std::size_t i = 0; i < 5; ++i) l += u[i] * s[i];
      return l;
    };
    st = std::max(st, relative_error(grad, numeric_gradient(std::span<double>(a), soft_loss)));

    model::PredictorConfig pc;
    pc.encoder_dims = {6, 8, 7};
    pc.heads.sizes = {3, 4};
    pc.heads.tau = 2.0;
    pc.tasks = 4;
    model::WtaPredictor m(pc, 100 + trial);
    const Tensor2 x = random_tensor(5, 6, rng);
    const Tensor2 g = random_tensor(5, 4, rng);
    m.zero_grad();
    m.backward(m.forward(x, model::WtaMode::relaxed, 2, nullptr), g);
    auto loss = [&] { return contract(m.forward(x, model::WtaMode::relaxed, 2, nullptr).logits, g); };
    std::vector<double> analytic, numeric;
    for (auto* p : m.parameters()) {
      const auto fd = numeric_gradient(p->value.values(), loss);
      analytic.insert(analytic.end(), p->grad.values().begin(), p->grad.values().end());
      numeric.insert(numeric.end(), fd.begin(), fd.end());
    }
    e2e = std::max(e2e, relative_error(analytic, numeric));
  }
  const double per_layer = std::max({lin, relu, norm, bce, st});
  return {per_layer < 1e-4 && e2e < 1e-3,
          fmt("max rel. error over 20 instances: linear %.1e, leaky relu %.1e, layer norm %.1e, bce %.1e, "
              "soft WTA %.1e; end to end %.1e",
              lin, relu, norm, bce, st, e2e)};
}

struct DeskRuns {
  std::vector<double> mae;
  std::vector<bool> symbolic, permutation;
};

DeskRuns run_matched_desk(std::size_t tasks, const fs::path& out, bool evaluate) {
  const auto c = preset("matched-desk", out, [&](json& j) { j["tasks"]["count"] = tasks; });
  experiment::gen_data(c);
  const auto trained = experiment::train_runs(c, 1, log_line);
  DeskRuns r;
  for (const auto& run : trained["runs"]) r.mae.push_back(run["test_mae"]);
  if (evaluate) {
    const auto evaluated = experiment::evaluate(c, {}, log_line);
    for (const auto& e : evaluated["evaluations"]) {
      r.symbolic.push_back(e["overall"]);
      r.permutation.push_back(e["structured_permutation"]);
    }
  }
  return r;
}

DeskRuns g_desk15;
bool g_desk15_ready = false;

const DeskRuns& desk15() {
  if (!g_desk15_ready) {
    g_desk15 = run_matched_desk(15, g_scratch / "matched-desk-15", true);
    g_desk15_ready = true;
  }
  return g_desk15;
}

// 4. Emergence on the desk matched setup.
Outcome matched_emergence() {
  const auto& r = desk15();
  std::size_t solved = 0;
  bool consistent = true;
  std::string per_seed;
  for (std::size_t i = 0; i < r.mae.size(); ++i) {
    const bool ok = r.mae[i] < 1e-4;
    solved += ok;
    if (ok && !(r.symbolic[i] && r.permutation[i])) consistent = false;
    per_seed += fmt("%sseed %zu MAE %.2e symbolic %s permutation %s", i ? "; " : "", i + 1, r.mae[i],
                    r.symbolic[i] ? "yes" : "no", r.permutation[i] ? "yes" : "no");
  }
  return {solved >= 1 && consistent, fmt("%zu/%zu seeds solved; ", solved, r.mae.size()) + per_seed};
}

// 5. Fewer tasks than one-hot columns do not solve the problem.
Outcome task_count() {
  const double min15 = *std::min_element(desk15().mae.begin(), desk15().mae.end());
  const auto r1 = run_matched_desk(1, g_scratch / "matched-desk-1", false);
  const auto r5 = run_matched_desk(5, g_scratch / "matched-desk-5", false);
  const double min1 = *std::min_element(r1.mae.begin(), r1.mae.end());
  const double min5 = *std::min_element(r5.mae.begin(), r5.mae.end());
  return {min15 * 10.0 <= min1 && min15 * 10.0 <= min5,
          fmt("min test MAE: n=1 %.2e, n=5 %.2e, n=15 %.2e", min1, min5, min15)};
}

struct Generalization {
  double mean_x = 0, mean_z = 0;
  std::vector<double> x, z;
};

Generalization read_report(const fs::path& file) {
  const auto j = read_json(file);
  Generalization g;
  g.mean_x = j["summary"][0]["test"]["mean_x"];
  g.mean_z = j["summary"][0]["test"]["mean_z_hat"];
  for (const auto& run : j["runs"]) {
    g.x.push_back(run["x"]["test_auc"].is_null() ? NAN : run["x"]["test_auc"].get<double>());
    g.z.push_back(run["z_hat"]["test_auc"].is_null() ? NAN : run["z_hat"]["test_auc"].get<double>());
  }
  return g;
}

std::string describe(const Generalization& g) {
  std::string s = fmt("mean AUC z_hat %.3f vs x %.3f (", g.mean_z, g.mean_x);
  for (std::size_t i = 0; i < g.z.size(); ++i) s += fmt("%s%.3f/%.3f", i ? ", " : "", g.z[i], g.x[i]);
  return s + ")";
}

bool beats_everywhere(const Generalization& g) {
  for (std::size_t i = 0; i < g.z.size(); ++i)
    if (!(g.z[i] > g.x[i])) return false;
  return !g.z.empty();
}

// 6. Pair-of-categories generalization with the ideal and a trained encoder.
Outcome pair_generalization() {
  const fs::path out = g_scratch / "unmatched-desk";
  const auto ideal = preset("unmatched-desk", out, [](json& j) { j["generalization"]["encoder"] = "ideal"; });
  experiment::gen_data(ideal);
  experiment::generalize(ideal, {}, 1, log_line);
  const auto gi = read_report(out / "generalize" / "pair-of-categories-ideal" / "report.json");

  const auto trained = preset("unmatched-desk", out);
  const auto runs = experiment::train_runs(trained, 1, log_line);
  const double mae = runs["runs"][0]["test_mae"];
  experiment::generalize(trained, {}, 1, log_line);
  const auto gt = read_report(out / "generalize" / "pair-of-categories-trained" / "report.json");

  const bool pass = gi.mean_z >= 0.95 && beats_everywhere(gi) && gt.mean_z >= 0.95 && beats_everywhere(gt);
  return {pass, "ideal: " + describe(gi) + fmt("; trained (test MAE %.2e): ", mae) + describe(gt)};
}

// 7. Constant-category split with the ideal encoder.
Outcome constant_generalization() {
  const fs::path out = g_scratch / "unmatched-desk-constant";
  const auto c = preset("unmatched-desk", out, [](json& j) {
    auto& g = j["generalization"];
    g["encoder"] = "ideal";
    g["split"] = {{"kind", "constant-category"}, {"constant", {0, 0}}, {"val", {0, 1}}};
    g["train_sizes"] = {100};
    g["trials"] = 5;
  });
  experiment::gen_data(c);
  experiment::generalize(c, {}, 1, log_line);
  const auto g = read_report(out / "generalize" / "constant-category-ideal" / "report.json");
  return {g.mean_z >= 0.99, describe(g)};
}

// 8. Symbolic checker scenarios and properties.
Outcome symbolic_checker() {
  const data::LatentStructure s({3, 2});
  const auto c = data::enumerate_code_matrix(s);
  std::vector<std::string> failed;

  const auto identity = symbolic::check_symbolic(s, c.rows, c.rows, {3, 2}, true);
  if (!(identity.overall && identity.localized_factors == 2)) failed.push_back("identity");

  // Neurons 0 and 1 alternate for category 0 of factor 0.
  Tensor2 z2(12, 5), shared(12, 6);
  for (std::size_t r = 0; r < 12; ++r) {
    const auto k = c.categories_of(r % 6);
    std::copy(c.rows.row(r % 6).begin(), c.rows.row(r % 6).end(), z2.row(r).begin());
    shared(r, k[0] == 0 ? r % 2 : k[0] + 1) = 1.0;
    shared(r, 4 + k[1]) = 1.0;
  }
  const auto sv = symbolic::check_symbolic(s, z2, shared, {4, 2});
  if (!(sv.overall && sv.categories[0].encoding == std::vector<std::size_t>{0, 1})) failed.push_back("shared coding");

  // Neuron 0 answers for categories 0 and 1 of factor 0.
  Tensor2 amb(6, 4);
  for (std::size_t r = 0; r < 6; ++r) {
    const auto k = c.categories_of(r);
    amb(r, k[0] == 2 ? 1 : 0) = 1.0;
    amb(r, 2 + k[1]) = 1.0;
  }
  const auto av = symbolic::check_symbolic(s, c.rows, amb, {2, 2}, true);
  if (!(!av.overall && av.categories[0].status == symbolic::CategoryStatus::not_symbolic &&
        av.categories[1].status == symbolic::CategoryStatus::not_symbolic &&
        av.categories[2].status == symbolic::CategoryStatus::symbolic && av.symbolic_categories == 3))
    failed.push_back("ambiguous neuron");

  // Order invariance and monotonicity on random noisy codes.
  nn::Rng rng(8);
  bool order_ok = true, monotone_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    Tensor2 z(30, 5), zh(30, 5);
    for (std::size_t r = 0; r < 30; ++r) {
      const std::size_t src = rng.below(6);
      std::copy(c.rows.row(src).begin(), c.rows.row(src).end(), z.row(r).begin());
      const auto k = c.categories_of(src);
      zh(r, rng.below(10) == 0 ? rng.below(3) : k[0]) = 1.0;
      zh(r, 3 + k[1]) = 1.0;
    }
    std::vector<std::size_t> order(30);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 30; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto full = symbolic::check_symbolic(s, z, zh, {3, 2});
    if (symbolic::to_json(full) != symbolic::to_json(symbolic::check_symbolic(s, z.gather_rows(order), zh.gather_rows(order), {3, 2})))
      order_ok = false;
    std::vector<std::size_t> head(10 + rng.below(15));
    std::iota(head.begin(), head.end(), 0);
    const auto part = symbolic::check_symbolic(s, z.gather_rows(head), zh.gather_rows(head), {3, 2});
    for (std::size_t i = 0; i < 5; ++i)
      if (full.categories[i].status == symbolic::CategoryStatus::symbolic &&
          part.categories[i].status == symbolic::CategoryStatus::not_symbolic)
        monotone_ok = false;
  }
  if (!order_ok) failed.push_back("order invariance");
  if (!monotone_ok) failed.push_back("monotonicity");
  std::string detail = "identity, shared coding, ambiguous neuron, order invariance, monotonicity";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

// 9. Sprite corpus and a reduced training run.
Outcome vision_pipeline() {
  const fs::path out = g_scratch / "sprites";
  const auto palette = vision::build_palette();
  const auto a = vision::build_corpus(palette);
  const auto b = vision::build_corpus(palette);
  fs::create_directories(out);
  data::write_dataset(out / "a.bin", a);
  data::write_dataset(out / "b.bin", b);
  const bool identical = slurp(out / "a.bin") == slurp(out / "b.bin");
  std::set<std::vector<double>> distinct;
  for (std::size_t i = 0; i < a.count(); ++i) distinct.insert({a.x.row(i).begin(), a.x.row(i).end()});
  const auto split = vision::make_vision_split(a);
  const bool sizes = split.train.size() == 1536 && split.val.size() == 192 && split.test.size() == 192;

  const auto c = preset("dsprites-desk", g_scratch / "dsprites-desk");
  const bool reduced = c.predictor.heads.sizes == std::vector<std::size_t>(4, 10) && c.train.l1_readout == 3e-4 &&
                       c.train.epochs == 200;
  experiment::gen_data(c);
  const auto runs = experiment::train_runs(c, 1, log_line);
  const auto ev = experiment::evaluate(c, {}, log_line);
  const fs::path verdict = experiment::seed_dir(c, c.seeds.front()) / "eval" / "verdict.json";
  const bool emitted = fs::exists(verdict) && read_json(verdict).contains("overall");
  const auto& e = ev["evaluations"][0];
  return {identical && distinct.size() == 1920 && sizes && reduced && emitted,
          fmt("corpus %s, %zu distinct images, split %zu/%zu/%zu; dsprites run: test MAE %.3g, symbolic %s "
              "(%zu/29 categories, %zu localized factors)",
              identical ? "bit-identical" : "DIFFERS", distinct.size(), split.train.size(), split.val.size(),
              split.test.size(), runs["runs"][0]["test_mae"].get<double>(), e["overall"].get<bool>() ? "yes" : "no",
              e["symbolic_categories"].get<std::size_t>(), e["localized_factors"].get<std::size_t>())};
}

// 10. Re-running any command reproduces its files byte for byte.
Outcome determinism() {
  auto config = [](const fs::path& out) {
    return preset("matched-desk", out, [](json& j) {
      j["train"]["epochs"] = 20;
      j["seeds"] = {1, 2};
      j["generalization"]["trials"] = 2;
      j["generalization"]["seeds"] = {1, 2};
      j["generalization"]["encoder"] = "ideal";
    });
  };
  const std::vector<fs::path> dirs{g_scratch / "determinism-a", g_scratch / "determinism-b"};
  for (std::size_t k = 0; k < 2; ++k) {
    const auto c = config(dirs[k]);
    experiment::gen_data(c);
    experiment::train_runs(c, k == 0 ? 1 : 2);  // thread count must not matter either
    experiment::evaluate(c);
    experiment::generalize(c, {}, k == 0 ? 1 : 2);
    experiment::render_sprites(dirs[k] / "sprites", false);
  }
  const std::vector<std::string> files{
      "data/phi.bin",          "data/train.bin",         "data/test.bin",
      "data/eval.bin",         "data/tasks.json",        "seed-1/model.ckpt",
      "seed-2/model.ckpt",     "seed-1/loss.csv",        "seed-2/run_record.json",
      "seed-1/eval/activation.csv", "seed-2/eval/verdict.json",
      "generalize/pair-of-categories-ideal/report.csv", "generalize/pair-of-categories-ideal/report.json",
      "sprites/corpus.bin"};
  std::vector<std::string> differ;
  for (const auto& f : files)
    if (!fs::exists(dirs[0] / f) || slurp(dirs[0] / f) != slurp(dirs[1] / f)) differ.push_back(f);
  std::string detail = fmt("%zu files compared across two runs", files.size());
  for (const auto& f : differ) detail += "; differs: " + f;
  return {differ.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <scratch dir> [criteria...]\n", argv[0]);
    return 2;
  }
  g_scratch = argv[1];
  fs::remove_all(g_scratch);
  fs::create_directories(g_scratch);
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"theorem counts", theorem_counts},
      {"posterior exactness", posterior_exactness},
      {"gradient checks", gradient_suite},
      {"matched emergence", matched_emergence},
      {"task count", task_count},
      {"pair-of-categories generalization", pair_generalization},
      {"constant-category generalization", constant_generalization},
      {"symbolic checker", symbolic_checker},
      {"vision pipeline", vision_pipeline},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(n)) continue;
    const auto started = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d %s: %s (%s) [%.0f s]\n", n, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(started));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
