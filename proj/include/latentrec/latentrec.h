/*
 * Copyright 2026 The latentrec Authors.
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to latentrec: a small recommender language model with
 * latent reasoning tokens, its data pipeline, training stages and
 * evaluation.
 *
 * Conventions:
 *   - Every fallible call returns lrec_status; LREC_OK is 0.
 *   - On failure, lrec_last_error() describes the error on the calling
 *     thread, prefixed with the stage that raised it ("[rl] ...").
 *   - Handles are opaque and owned by the caller; free them with the
 *     matching *_free function (NULL is accepted).
 *   - String outputs use (buf, cap, len): *len receives the length without
 *     the terminating NUL. Passing buf == NULL queries the length. A
 *     non-NULL buffer that is too small yields LREC_ERR_INVALID_ARGUMENT.
 */
#ifndef LATENTREC_LATENTREC_H_
#define LATENTREC_LATENTREC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LREC_API __declspec(dllexport)
#else
#define LREC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  LREC_OK = 0,
  LREC_ERR_INVALID_ARGUMENT = 1,
  LREC_ERR_IO = 2,
  LREC_ERR_FORMAT = 3,
  LREC_ERR_CONFIG = 4,
  LREC_ERR_NUMERIC = 5,
  LREC_ERR_STATE = 6,
  LREC_ERR_INTERNAL = 7
} lrec_status;

typedef struct lrec_config lrec_config;
typedef struct lrec_dataset lrec_dataset;
typedef struct lrec_checkpoint lrec_checkpoint;

typedef enum { LREC_GROUP_BASE = 0, LREC_GROUP_LATENT = 1 } lrec_param_group;

LREC_API const char* lrec_version(void);
LREC_API const char* lrec_status_name(lrec_status status);
LREC_API const char* lrec_last_error(void);
/* JSON summary written by the last successful command on this thread. */
LREC_API const char* lrec_last_result(void);

/* ---- Run configuration ------------------------------------------------ */

LREC_API lrec_status lrec_config_new(lrec_config** out);
LREC_API void lrec_config_free(lrec_config* config);
LREC_API lrec_status lrec_config_set(lrec_config* config, const char* key, const char* value);
LREC_API lrec_status lrec_config_get(const lrec_config* config, const char* key, char* buf,
                                     size_t cap, size_t* len);
/* "key = value" lines, '#' comments; unknown keys are errors. */
LREC_API lrec_status lrec_config_load_file(lrec_config* config, const char* path);
LREC_API lrec_status lrec_config_canonical(const lrec_config* config, char* buf, size_t cap,
                                           size_t* len);
LREC_API lrec_status lrec_config_hash(const lrec_config* config, char* buf, size_t cap,
                                      size_t* len);
LREC_API size_t lrec_config_key_count(void);
/* NULL when i is out of range. */
LREC_API const char* lrec_config_key_name(size_t i);
LREC_API const char* lrec_config_key_help(size_t i);

/* ---- Commands ----------------------------------------------------------- */

LREC_API lrec_status lrec_cmd_synth_data(const lrec_config* config, const char* out_dir);
LREC_API lrec_status lrec_cmd_prepare_data(const lrec_config* config, const char* tsv_path,
                                           const char* out_dir);
LREC_API lrec_status lrec_cmd_sft(const lrec_config* config, const char* data_dir,
                                  const char* run_dir);
LREC_API lrec_status lrec_cmd_rl(const lrec_config* config, const char* data_dir,
                                 const char* checkpoint, const char* run_dir);
LREC_API lrec_status lrec_cmd_eval(const lrec_config* config, const char* data_dir,
                                   const char* checkpoint, const char* out_path);
LREC_API lrec_status lrec_cmd_ablate(const lrec_config* config, const char* data_dir,
                                     const char* run_dir);
LREC_API lrec_status lrec_cmd_sweep_length(const lrec_config* config, const char* data_dir,
                                           const char* run_dir);
LREC_API lrec_status lrec_cmd_bench_reward(const lrec_config* config, const char* data_dir,
                                           const char* checkpoint, const char* run_dir);

/* ---- Datasets and checkpoints ----------------------------------------- */

LREC_API lrec_status lrec_dataset_load(const char* dir, lrec_dataset** out);
LREC_API void lrec_dataset_free(lrec_dataset* dataset);
/* split: "train", "valid" or "test". */
LREC_API lrec_status lrec_dataset_split_size(const lrec_dataset* dataset, const char* split,
                                             size_t* out);
LREC_API lrec_status lrec_dataset_catalog_size(const lrec_dataset* dataset, size_t* out);
LREC_API lrec_status lrec_dataset_item_id(const lrec_dataset* dataset, size_t index, char* buf,
                                          size_t cap, size_t* len);

LREC_API lrec_status lrec_checkpoint_load(const char* path, lrec_checkpoint** out);
LREC_API void lrec_checkpoint_free(lrec_checkpoint* checkpoint);
LREC_API lrec_status lrec_checkpoint_hash(const lrec_checkpoint* checkpoint, uint64_t* out);
LREC_API lrec_status lrec_checkpoint_group_hash(const lrec_checkpoint* checkpoint,
                                                lrec_param_group group, uint64_t* out);
LREC_API lrec_status lrec_checkpoint_meta(const lrec_checkpoint* checkpoint, const char* key,
                                          char* buf, size_t cap, size_t* len);

/* Catalog indices ranked for one prompt of a split, best first. items may
 * be NULL to query the count; otherwise cap must cover the catalog. */
LREC_API lrec_status lrec_rank(const lrec_checkpoint* checkpoint, const lrec_dataset* dataset,
                               const char* split, size_t sample, int32_t* items, size_t cap,
                               size_t* count);

#ifdef __cplusplus
}
#endif

#endif /* LATENTREC_LATENTREC_H_ */
