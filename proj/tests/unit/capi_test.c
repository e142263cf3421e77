/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include <wta/wta.h>

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static const char* kTinyConfig =
    "{\"setup\":\"custom\",\"structure\":[2,3,2],"
    "\"phi\":{\"dims\":[7,12,12],\"slope\":0.01,\"bias\":true},"
    "\"model\":{\"encoder_dims\":[12,10,7],\"heads\":[2,3,2],\"tau\":5.0,\"tau_decay\":0.99},"
    "\"tasks\":{\"count\":6},\"data\":{\"train\":200,\"test\":40,\"seed\":3},"
    "\"train\":{\"epochs\":2,\"batch_size\":32,\"learning_rate\":0.01,\"t_max\":2},"
    "\"seeds\":[1],\"mae_threshold\":1e-4,"
    "\"output\":\"/tmp/wta_capi_test\"}";

static int log_lines = 0;
static void count_log(const char* message, void* user) {
  (void)message;
  ++*(int*)user;
}

int main(void) {
  char* text = NULL;
  wta_config* cfg = NULL;

  EXPECT(strcmp(wta_version(), "1.0.0") == 0);
  EXPECT(strcmp(wta_status_name(WTA_OK), "ok") == 0);

  EXPECT(wta_config_preset("matched-desk", &cfg) == WTA_OK);
  EXPECT(wta_config_to_json(cfg, &text) == WTA_OK);
  EXPECT(text != NULL && strstr(text, "\"setup\": \"matched\"") != NULL);
  wta_string_free(text);
  wta_config_free(cfg);
  cfg = NULL;

  EXPECT(wta_config_preset("no-such-preset", &cfg) != WTA_OK);
  EXPECT(cfg == NULL);
  EXPECT(strlen(wta_last_error()) > 0);
  EXPECT(wta_config_parse("{not json", &cfg) == WTA_CONFIG_ERROR);
  EXPECT(wta_config_parse("{\"setup\":\"matched\",\"bogus\":1}", &cfg) == WTA_CONFIG_ERROR);
  EXPECT(wta_config_parse(NULL, &cfg) == WTA_INVALID_ARGUMENT);

  EXPECT(wta_verify_theorem(2, 2, 1, 0, 0, "/tmp/wta_capi_test/theorem", &text) == WTA_OK);
  EXPECT(text != NULL && strstr(text, "\"realizable\": 8") != NULL);
  wta_string_free(text);
  text = NULL;
  EXPECT(wta_verify_theorem(2, 1, 1, 0, 0, "/tmp/wta_capi_test/theorem", &text) == WTA_INVALID_ARGUMENT);
  EXPECT(text == NULL);

  wta_set_log(count_log, &log_lines);
  EXPECT(wta_config_parse(kTinyConfig, &cfg) == WTA_OK);
  EXPECT(wta_gen_data(cfg, &text) == WTA_OK);
  wta_string_free(text);
  EXPECT(wta_train(cfg, 1, &text) == WTA_OK);
  wta_string_free(text);
  EXPECT(log_lines > 0);
  EXPECT(wta_eval(cfg, NULL, &text) == WTA_OK);
  wta_string_free(text);
  EXPECT(wta_eval(cfg, "/tmp/wta_capi_test/none.ckpt", &text) == WTA_IO_ERROR);
  wta_set_log(NULL, NULL);

  wta_model* model = NULL;
  EXPECT(wta_model_load("/tmp/wta_capi_test/seed-1/model.ckpt", &model) == WTA_OK);
  size_t in = 0, code = 0, tasks = 0;
  EXPECT(wta_model_dims(model, &in, &code, &tasks) == WTA_OK);
  EXPECT(in == 12 && code == 7 && tasks == 6);

  wta_dataset* ds = NULL;
  EXPECT(wta_dataset_load("/tmp/wta_capi_test/data/eval.bin", &ds) == WTA_OK);
  size_t count = 0, dim = 0, factors = 0;
  EXPECT(wta_dataset_dims(ds, &count, &dim, &factors) == WTA_OK);
  EXPECT(count == 12 && dim == 12 && factors == 3);
  const double* x = NULL;
  const uint16_t* cats = NULL;
  EXPECT(wta_dataset_inputs(ds, &x) == WTA_OK);
  EXPECT(wta_dataset_categories(ds, &cats) == WTA_OK);
  EXPECT(cats[factors * 11 + 0] == 1 && cats[factors * 11 + 1] == 2 && cats[factors * 11 + 2] == 1);

  double* z_hat = malloc(sizeof(double) * count * code);
  double* y = malloc(sizeof(double) * count * tasks);
  EXPECT(wta_model_encode(model, x, count, z_hat) == WTA_OK);
  EXPECT(wta_model_predict(model, x, count, y) == WTA_OK);
  for (size_t r = 0; r < count; ++r) {
    double ones = 0.0;
    for (size_t j = 0; j < code; ++j) ones += z_hat[r * code + j];
    EXPECT(ones == 3.0);
    for (size_t t = 0; t < tasks; ++t) EXPECT(y[r * tasks + t] > 0.0 && y[r * tasks + t] < 1.0);
  }
  EXPECT(wta_model_encode(model, NULL, count, z_hat) == WTA_INVALID_ARGUMENT);
  free(z_hat);
  free(y);
  wta_dataset_free(ds);
  wta_model_free(model);

  EXPECT(wta_model_load("/tmp/wta_capi_test/none.ckpt", &model) == WTA_IO_ERROR);
  wta_config_free(cfg);

  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("capi: all checks passed\n");
  return failures ? 1 : 0;
}
