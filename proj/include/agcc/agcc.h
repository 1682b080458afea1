/* SPDX-License-Identifier: Apache-2.0 */
#ifndef AGCC_AGCC_H
#define AGCC_AGCC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AGCC_API __declspec(dllexport)
#else
#define AGCC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum agcc_status {
  AGCC_OK = 0,
  AGCC_CONFIG_ERROR = 10,
  AGCC_INSUFFICIENT_RANGE = 11,
  AGCC_DATA_ERROR = 20,
  AGCC_MALFORMED_INPUT = 21,
  AGCC_PARSE_ERROR = 22,
  AGCC_OVERLAP_ERROR = 23,
  AGCC_NOT_NORMALIZED = 24,
  AGCC_DIMENSION_MISMATCH = 25,
  AGCC_EMPTY_SET = 26,
  AGCC_TOO_FEW_SAMPLES = 27,
  AGCC_MODEL_MISMATCH = 28,
  AGCC_EMPTY_CORPUS = 29,
  AGCC_JOIN_ERROR = 30,
  AGCC_UNKNOWN_CLUSTER = 31,
  AGCC_EMPTY_BATCH = 32,
  AGCC_NO_COMMON_CLUSTERS = 33,
  AGCC_MISSING_CLASS = 34,
  AGCC_IO_ERROR = 35,
  AGCC_NUMERIC_ERROR = 40,
  AGCC_DEGENERATE_FACE = 41,
  AGCC_NON_FINITE = 42,
  AGCC_INVALID_ARGUMENT = 90, /* null pointer or bad size at the API boundary */
  AGCC_INTERNAL_ERROR = 99
} agcc_status;

AGCC_API const char* agcc_version(void);
AGCC_API const char* agcc_status_name(agcc_status s);
/* 0 ok, 2 configuration, 3 data, 4 numeric. */
AGCC_API int agcc_exit_code(agcc_status s);
/* Message of the last failed call on this thread; "" after a success. */
AGCC_API const char* agcc_last_error(void);
AGCC_API void agcc_string_free(char* s);

/* Series are row-major frames x dims. */
AGCC_API agcc_status agcc_soft_dtw(const double* a, size_t frames_a, const double* b, size_t frames_b,
                                   size_t dims, double gamma, double* value);
/* grad_a receives frames_a x dims values. */
AGCC_API agcc_status agcc_soft_dtw_grad(const double* a, size_t frames_a, const double* b, size_t frames_b,
                                        size_t dims, double gamma, double* value, double* grad_a);

/* One 68-point face as x0,y0,...,x67,y67 mapped into the canonical frame. */
AGCC_API agcc_status agcc_normalize_face(const double* xy, double* out_xy);

AGCC_API agcc_status agcc_overlap_counts(const size_t* counts1, const size_t* counts2, size_t k,
                                         double threshold_percent, double* sim_percent, size_t* n_common);

AGCC_API agcc_status agcc_uar(const int* predictions, const int* labels, size_t n, double* out);

/* z is n x dim; triplets holds 3 row indices per triplet (anchor, positive,
   negative); grad receives n x dim values and may be null. */
AGCC_API agcc_status agcc_ag_loss(const double* z, size_t n, size_t dim, const size_t* triplets,
                                  const double* weights, size_t n_triplets, double alpha, int hinge,
                                  double* value, double* grad);

typedef struct agcc_model agcc_model;

AGCC_API agcc_status agcc_model_fit(const double* const* series, const size_t* frames, size_t n, size_t dims,
                                    size_t k, double gamma, uint64_t seed, agcc_model** out);
AGCC_API agcc_status agcc_model_load(const char* dir, agcc_model** out);
AGCC_API agcc_status agcc_model_save(const agcc_model* m, const char* dir);
AGCC_API size_t agcc_model_k(const agcc_model* m);
AGCC_API size_t agcc_model_dims(const agcc_model* m);
AGCC_API agcc_status agcc_model_predict(const agcc_model* m, const double* series, size_t frames, int* cluster,
                                        double* distance);
/* exp(-beta * normalized centroid distance) */
AGCC_API agcc_status agcc_model_weight(const agcc_model* m, int cluster_i, int cluster_n, double beta,
                                       double* out);
AGCC_API void agcc_model_free(agcc_model* m);

/* Pipeline configuration: an optional TOML file plus key=value overrides
   (e.g. "train.max_epochs", "5"), applied in call order after the file. */
typedef struct agcc_config agcc_config;

AGCC_API agcc_status agcc_config_new(agcc_config** out);
AGCC_API agcc_status agcc_config_set_file(agcc_config* c, const char* path);
AGCC_API agcc_status agcc_config_set(agcc_config* c, const char* key, const char* value);
/* Validates and returns the effective configuration as JSON. */
AGCC_API agcc_status agcc_config_resolve(const agcc_config* c, char** json_out);
AGCC_API void agcc_config_free(agcc_config* c);

typedef struct agcc_run agcc_run;

/* command: normalize, segment, cluster, overlap, associate, train, evaluate, synth */
AGCC_API agcc_status agcc_run_command(const agcc_config* c, const char* command, agcc_run** out);
AGCC_API const char* agcc_run_dir(const agcc_run* r);
AGCC_API const char* agcc_run_summary(const agcc_run* r);
AGCC_API size_t agcc_run_warning_count(const agcc_run* r);
AGCC_API const char* agcc_run_warning(const agcc_run* r, size_t i);
AGCC_API void agcc_run_free(agcc_run* r);

AGCC_API agcc_status agcc_compare_histories(const char* history_a, const char* history_b, char** json_out);
AGCC_API agcc_status agcc_content_hash(const char* dir, char** hex_out);

#ifdef __cplusplus
}
#endif

#endif
