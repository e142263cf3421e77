/* C interface to the WTA library: experiment commands, checkpoints and datasets.
 *
 * Every fallible call returns a wta_status. On failure, wta_last_error() holds a
 * message for the calling thread until that thread's next call into the library.
 * Strings returned through char** are heap copies and must be released with
 * wta_string_free(). Handles are opaque and released with their _free function;
 * passing NULL to a _free function is a no-op. */
#ifndef WTA_WTA_H
#define WTA_WTA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WTA_API __declspec(dllexport)
#else
#define WTA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wta_status {
  WTA_OK = 0,
  WTA_INVALID_ARGUMENT = 1,
  WTA_CONFIG_ERROR = 2,
  WTA_IO_ERROR = 3,
  WTA_DIVERGED = 4,
  WTA_UNSUPPORTED = 5,
  WTA_INTERNAL_ERROR = 6
} wta_status;

typedef struct wta_config wta_config;
typedef struct wta_model wta_model;
typedef struct wta_dataset wta_dataset;

/* Progress messages from long-running commands. Called from worker threads
 * when jobs > 1, never concurrently. */
typedef void (*wta_log_fn)(const char* message, void* user);

WTA_API const char* wta_version(void);
WTA_API const char* wta_last_error(void);
WTA_API const char* wta_status_name(wta_status status);
WTA_API void wta_string_free(char* s);
WTA_API void wta_set_log(wta_log_fn fn, void* user);

/* Experiment configuration. */
WTA_API wta_status wta_config_load(const char* path, wta_config** out);
WTA_API wta_status wta_config_parse(const char* json, wta_config** out);
/* Looks up <name>.json in $WTA_PRESET_DIR, falling back to the bundled presets. */
WTA_API wta_status wta_config_preset(const char* name, wta_config** out);
WTA_API void wta_config_free(wta_config* config);
WTA_API wta_status wta_config_set_seeds(wta_config* config, const uint64_t* seeds, size_t count);
WTA_API wta_status wta_config_set_output(wta_config* config, const char* dir);
WTA_API wta_status wta_config_to_json(const wta_config* config, char** json);

/* Commands. Each writes its files under the configured output directory and,
 * when summary is not NULL, returns a JSON summary. */
WTA_API wta_status wta_gen_data(const wta_config* config, char** summary);
WTA_API wta_status wta_train(const wta_config* config, size_t jobs, char** summary);
/* checkpoint may be NULL to evaluate every configured seed. */
WTA_API wta_status wta_eval(const wta_config* config, const char* checkpoint, char** summary);
/* checkpoint may be NULL to use the configured encoder choice. */
WTA_API wta_status wta_generalize(const wta_config* config, const char* checkpoint, size_t jobs, char** summary);
WTA_API wta_status wta_verify_theorem(size_t m, size_t l_c, int exhaustive, size_t trials, uint64_t seed,
                                      const char* out_dir, char** report);
WTA_API wta_status wta_render_sprites(const char* out_dir, int write_pngs, char** summary);

/* Trained models, for eval-only use. Buffers are row-major. */
WTA_API wta_status wta_model_load(const char* path, wta_model** out);
WTA_API void wta_model_free(wta_model* model);
WTA_API wta_status wta_model_dims(const wta_model* model, size_t* input_dim, size_t* code_dim, size_t* tasks);
/* x is rows x input_dim; z_hat receives rows x code_dim binary values. */
WTA_API wta_status wta_model_encode(const wta_model* model, const double* x, size_t rows, double* z_hat);
/* y receives rows x tasks probabilities. */
WTA_API wta_status wta_model_predict(const wta_model* model, const double* x, size_t rows, double* y);

/* Datasets written by gen-data. Returned pointers are owned by the handle. */
WTA_API wta_status wta_dataset_load(const char* path, wta_dataset** out);
WTA_API void wta_dataset_free(wta_dataset* dataset);
WTA_API wta_status wta_dataset_dims(const wta_dataset* dataset, size_t* count, size_t* input_dim, size_t* factors);
WTA_API wta_status wta_dataset_inputs(const wta_dataset* dataset, const double** x);
WTA_API wta_status wta_dataset_categories(const wta_dataset* dataset, const uint16_t** categories);

#ifdef __cplusplus
}
#endif

#endif /* WTA_WTA_H */
