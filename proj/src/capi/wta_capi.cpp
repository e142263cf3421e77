#include "wta/wta.h"

#include <cstdlib>
#include <cstring>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "wta/data/dataset.hpp"
#include "wta/error.hpp"
#include "wta/experiment/commands.hpp"
#include "wta/experiment/config.hpp"
#include "wta/model/predictor.hpp"

struct wta_config {
  wta::experiment::ExperimentConfig value;
};

struct wta_model {
  wta::model::WtaPredictor value;
};

struct wta_dataset {
  wta::data::Dataset value;
};

namespace {

thread_local std::string last_error;

std::mutex log_mutex;
wta_log_fn log_fn = nullptr;
void* log_user = nullptr;

void forward_log(const std::string& msg) {
  std::lock_guard lock(log_mutex);
  if (log_fn) log_fn(msg.c_str(), log_user);
}

wta::experiment::Logger logger() { return forward_log; }

wta_status to_status(wta::ErrorCode code) {
  switch (code) {
    case wta::ErrorCode::invalid_argument: return WTA_INVALID_ARGUMENT;
    case wta::ErrorCode::config: return WTA_CONFIG_ERROR;
    case wta::ErrorCode::io: return WTA_IO_ERROR;
    case wta::ErrorCode::diverged: return WTA_DIVERGED;
    case wta::ErrorCode::unsupported: return WTA_UNSUPPORTED;
    case wta::ErrorCode::internal: return WTA_INTERNAL_ERROR;
  }
  return WTA_INTERNAL_ERROR;
}

// Runs `body`, translating every exception into a status and last_error.
template <class F>
wta_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return WTA_OK;
  } catch (const wta::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return WTA_CONFIG_ERROR;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return WTA_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    last_error = e.what();
    return WTA_INTERNAL_ERROR;
  } catch (...) {
    last_error = "unknown exception";
    return WTA_INTERNAL_ERROR;
  }
}

void need(const void* p, const char* what) {
  if (!p) wta::fail(wta::ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(const nlohmann::json& j, char** out) {
  if (out) *out = copy_string(j.dump(2));
}

std::optional<std::filesystem::path> optional_path(const char* p) {
  if (!p || !*p) return std::nullopt;
  return std::filesystem::path(p);
}

std::filesystem::path preset_dir() {
  if (const char* env = std::getenv("WTA_PRESET_DIR"); env && *env) return env;
  return WTA_DEFAULT_PRESET_DIR;
}

}  // namespace

extern "C" {

const char* wta_version(void) { return "1.0.0"; }

const char* wta_last_error(void) { return last_error.c_str(); }

const char* wta_status_name(wta_status status) {
  switch (status) {
    case WTA_OK: return "ok";
    case WTA_INVALID_ARGUMENT: return "invalid argument";
    case WTA_CONFIG_ERROR: return "config error";
    case WTA_IO_ERROR: return "I/O error";
    case WTA_DIVERGED: return "diverged";
    case WTA_UNSUPPORTED: return "unsupported";
    case WTA_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

void wta_string_free(char* s) { std::free(s); }

void wta_set_log(wta_log_fn fn, void* user) {
  std::lock_guard lock(log_mutex);
  log_fn = fn;
  log_user = user;
}

wta_status wta_config_load(const char* path, wta_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new wta_config{wta::experiment::load_config(path)};
  });
}

wta_status wta_config_parse(const char* json, wta_config** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      wta::fail(wta::ErrorCode::config, std::string("malformed config: ") + e.what());
    }
    *out = new wta_config{wta::experiment::config_from_json(j)};
  });
}

wta_status wta_config_preset(const char* name, wta_config** out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    *out = new wta_config{wta::experiment::load_config(wta::experiment::preset_path(name, preset_dir()))};
  });
}

void wta_config_free(wta_config* config) { delete config; }

wta_status wta_config_set_seeds(wta_config* config, const uint64_t* seeds, size_t count) {
  return guarded([&] {
    need(config, "config");
    need(seeds, "seeds");
    if (count == 0) wta::fail(wta::ErrorCode::invalid_argument, "at least one seed is required");
    config->value.seeds.assign(seeds, seeds + count);
  });
}

wta_status wta_config_set_output(wta_config* config, const char* dir) {
  return guarded([&] {
    need(config, "config");
    need(dir, "dir");
    if (!*dir) wta::fail(wta::ErrorCode::invalid_argument, "output directory must not be empty");
    config->value.output = dir;
  });
}

wta_status wta_config_to_json(const wta_config* config, char** json) {
  return guarded([&] {
    need(config, "config");
    need(json, "json");
    emit(wta::experiment::to_json(config->value), json);
  });
}

wta_status wta_gen_data(const wta_config* config, char** summary) {
  return guarded([&] {
    need(config, "config");
    emit(wta::experiment::gen_data(config->value, logger()), summary);
  });
}

wta_status wta_train(const wta_config* config, size_t jobs, char** summary) {
  return guarded([&] {
    need(config, "config");
    emit(wta::experiment::train_runs(config->value, jobs, logger()), summary);
  });
}

wta_status wta_eval(const wta_config* config, const char* checkpoint, char** summary) {
  return guarded([&] {
    need(config, "config");
    emit(wta::experiment::evaluate(config->value, optional_path(checkpoint), logger()), summary);
  });
}

wta_status wta_generalize(const wta_config* config, const char* checkpoint, size_t jobs, char** summary) {
  return guarded([&] {
    need(config, "config");
    emit(wta::experiment::generalize(config->value, optional_path(checkpoint), jobs, logger()), summary);
  });
}

wta_status wta_verify_theorem(size_t m, size_t l_c, int exhaustive, size_t trials, uint64_t seed, const char* out_dir,
                              char** report) {
  return guarded([&] {
    need(out_dir, "out_dir");
    wta::theory::TheoremOptions opts;
    opts.mode = exhaustive ? wta::theory::TheoremMode::exhaustive : wta::theory::TheoremMode::sampled;
    opts.trials = trials;
    opts.seed = seed;
    emit(wta::experiment::verify_theorem(m, l_c, opts, out_dir, logger()), report);
  });
}

wta_status wta_render_sprites(const char* out_dir, int write_pngs, char** summary) {
  return guarded([&] {
    need(out_dir, "out_dir");
    emit(wta::experiment::render_sprites(out_dir, write_pngs != 0, logger()), summary);
  });
}

wta_status wta_model_load(const char* path, wta_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new wta_model{wta::model::read_checkpoint(path).model};
  });
}

void wta_model_free(wta_model* model) { delete model; }

wta_status wta_model_dims(const wta_model* model, size_t* input_dim, size_t* code_dim, size_t* tasks) {
  return guarded([&] {
    need(model, "model");
    if (input_dim) *input_dim = model->value.input_dim();
    if (code_dim) *code_dim = model->value.code_dim();
    if (tasks) *tasks = model->value.tasks();
  });
}

namespace {

wta::nn::Tensor2 input_block(const wta_model* model, const double* x, size_t rows) {
  need(model, "model");
  need(x, "x");
  if (rows == 0) wta::fail(wta::ErrorCode::invalid_argument, "rows must be positive");
  const std::size_t d = model->value.input_dim();
  wta::nn::Tensor2 t(rows, d);
  std::memcpy(t.values().data(), x, rows * d * sizeof(double));
  return t;
}

void copy_out(const wta::nn::Tensor2& t, double* out) { std::memcpy(out, t.values().data(), t.size() * sizeof(double)); }

}  // namespace

wta_status wta_model_encode(const wta_model* model, const double* x, size_t rows, double* z_hat) {
  return guarded([&] {
    need(z_hat, "z_hat");
    copy_out(model->value.encode(input_block(model, x, rows)), z_hat);
  });
}

wta_status wta_model_predict(const wta_model* model, const double* x, size_t rows, double* y) {
  return guarded([&] {
    need(y, "y");
    copy_out(model->value.predict(input_block(model, x, rows)), y);
  });
}

wta_status wta_dataset_load(const char* path, wta_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new wta_dataset{wta::data::read_dataset(path)};
  });
}

void wta_dataset_free(wta_dataset* dataset) { delete dataset; }

wta_status wta_dataset_dims(const wta_dataset* dataset, size_t* count, size_t* input_dim, size_t* factors) {
  return guarded([&] {
    need(dataset, "dataset");
    if (count) *count = dataset->value.count();
    if (input_dim) *input_dim = dataset->value.input_dim();
    if (factors) *factors = dataset->value.structure.factors();
  });
}

wta_status wta_dataset_inputs(const wta_dataset* dataset, const double** x) {
  return guarded([&] {
    need(dataset, "dataset");
    need(x, "x");
    *x = dataset->value.x.values().data();
  });
}

wta_status wta_dataset_categories(const wta_dataset* dataset, const uint16_t** categories) {
  return guarded([&] {
    need(dataset, "dataset");
    need(categories, "categories");
    *categories = dataset->value.categories.data();
  });
}

}  // extern "C"
