#ifndef HZCERT_CAPI_H
#define HZCERT_CAPI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hz_status {
  HZ_OK = 0,
  HZ_ERR_PARSE = 1,
  HZ_ERR_SHAPE = 2,
  HZ_ERR_VALUE = 3,
  HZ_ERR_IO = 4,
  HZ_ERR_RUNTIME = 5,
} hz_status;

/* Message of the last failing call on this thread ("" if none). */
const char* hz_last_error(void);
/* Frees strings returned through char** out-parameters. */
void hz_string_free(char* s);

typedef struct hz_network hz_network;
typedef struct hz_dataset hz_dataset;

/* ---- networks ---- */
hz_status hz_network_parse(const char* text, hz_network** out);
hz_status hz_network_parse_file(const char* path, hz_network** out);
void hz_network_free(hz_network* net);
hz_status hz_network_init(hz_network* net, uint64_t seed);
hz_status hz_network_load_weights(hz_network* net, const char* path);
hz_status hz_network_save_weights(const hz_network* net, const char* path);
hz_status hz_network_print(const hz_network* net, char** out);
hz_status hz_network_shape_trace(const hz_network* net, char** out);
hz_status hz_network_set_range(hz_network* net, double lo, double hi);
hz_status hz_network_param_count(const hz_network* net, size_t* out);

/* ---- datasets ---- */
hz_status hz_dataset_load_idx(const char* images_path, const char* labels_path,
                              hz_dataset** out);
/* kind: "blobs" | "moons" */
hz_status hz_dataset_synthetic(const char* kind, size_t n, double noise, uint64_t seed,
                               hz_dataset** out);
hz_status hz_dataset_split(const hz_dataset* d, double test_fraction, hz_dataset** train,
                           hz_dataset** test);
size_t hz_dataset_count(const hz_dataset* d);
void hz_dataset_free(hz_dataset* d);

/* ---- DSL ---- */
hz_status hz_dsl_print_goal(const char* text, char** out);
hz_status hz_dsl_print_schedule(const char* text, char** out);
hz_status hz_dsl_eval_schedule(const char* text, double t, double* out);
hz_status hz_dsl_preset(const char* name, size_t k, char** out);
/* newline-separated preset names */
hz_status hz_dsl_preset_names(char** out);

/* ---- work ----
 * config_json for hz_train (all keys optional unless noted):
 *   goal (string, required), epsilon, epochs, batch, optimizer ("adam"|"sgd"),
 *   lr, momentum, l2, lr_milestones (array), lr_multiplier, seed, eval_subset,
 *   domain ("box"|"hzono"), out_dir, threads.
 * Per-epoch JSON lines go to jsonl_path when non-NULL; a summary JSON object
 * is returned through summary_json. */
hz_status hz_train(hz_network* net, const hz_dataset* train_data, const hz_dataset* test_data,
                   const char* config_json, const char* jsonl_path, char** summary_json);
hz_status hz_verify(const hz_network* net, const hz_dataset* data, double epsilon,
                    const char* domain, size_t limit, int threads, const char* jsonl_path,
                    char** summary_json);
hz_status hz_attack(const hz_network* net, const hz_dataset* data, double epsilon, size_t limit,
                    char** summary_json);

#ifdef __cplusplus
}
#endif

#endif /* HZCERT_CAPI_H */
