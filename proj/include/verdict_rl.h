/* verdict_rl.h - C interface to the verdict-rl training machinery.
 *
 * All functions return vrl_status; on any failure vrl_last_error() carries a
 * human-readable message for the calling thread. Handles are opaque and must
 * be released with their matching free function. Strings returned through
 * char** out-parameters are heap-allocated; release them with
 * vrl_string_free().
 */
#ifndef VERDICT_RL_H
#define VERDICT_RL_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vrl_status {
  VRL_OK = 0,
  VRL_ERR_INVALID_ARG = 1,
  VRL_ERR_CONFIG = 2,
  VRL_ERR_IO = 3,
  VRL_ERR_DATA = 4,         /* malformed input files */
  VRL_ERR_INCOMPATIBLE = 5, /* checkpoint/dataset mismatch */
  VRL_ERR_TRAINING = 6,     /* non-finite gradient, failed cold start */
  VRL_ERR_LOCKED = 7,       /* output directory claimed by another run */
  VRL_ERR_INTERNAL = 8
} vrl_status;

const char* vrl_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
const char* vrl_last_error(void);

void vrl_string_free(char* s);

/* --- configuration ------------------------------------------------------ */

typedef struct vrl_config vrl_config;

/* A config with all defaults applied. Never fails. */
vrl_config* vrl_config_new(void);

/* Parses an INI-style config file; NULL on failure (see vrl_last_error). */
vrl_config* vrl_config_load(const char* path);

void vrl_config_free(vrl_config* cfg);

/* Dotted keys, e.g. "grpo.seed", "rewards.w_json", "output.dir". */
vrl_status vrl_config_set(vrl_config* cfg, const char* key, const char* value);
vrl_status vrl_config_get(const vrl_config* cfg, const char* key, char** value_out);

/* Canonical serialization of the resolved config. */
vrl_status vrl_config_dump(const vrl_config* cfg, char** text_out);
vrl_status vrl_config_save(const vrl_config* cfg, const char* path);

/* --- datasets ------------------------------------------------------------ */

/* Writes a balanced synthetic dataset (dataset.* keys of the config) as
 * instance JSONL. */
vrl_status vrl_make_dataset(const vrl_config* cfg, const char* out_path);

/* --- training and evaluation --------------------------------------------- */

/* Two-stage pipeline (cold start, then GRPO). Artifacts go to output.dir:
 * train/heldout dataset snapshots, sft.ckpt, final.ckpt, metrics.csv,
 * config.resolved.ini, eval.json (when a held-out set is configured). */
vrl_status vrl_train(const vrl_config* cfg);

/* One named ablation arm: full, no_format, no_json, no_agentic, zero,
 * sft_only. Writes under <output.dir>/<arm> and appends to ablation.csv. */
vrl_status vrl_ablate(const vrl_config* cfg, const char* arm);

/* Greedy-decoding evaluation of a checkpoint against an instance JSONL.
 * report_json_out (optional) receives the EvalReport as JSON; out_path
 * (optional) writes the same JSON to a file. */
vrl_status vrl_eval(const char* checkpoint_path, const char* dataset_path, const char* out_path,
                    char** report_json_out);

/* --- reward scoring ------------------------------------------------------ */

typedef struct vrl_reward_vector {
  double r_format;  /* 0 or 1 */
  double r_json;    /* 0 or 1 */
  double r_acc;     /* -1, 0 or 1 */
  double r_agentic; /* -1, 0 or (0,1] */
  double total;     /* weighted sum */
} vrl_reward_vector;

/* Scores one completion against a label (0 = REAL, 1 = AI-GENERATED) and the
 * three ground-truth agent probabilities. weights may be NULL for unit
 * weights; order is format, json, accuracy, agentic. */
vrl_status vrl_score_completion(const char* completion, int label, double prob_semantic,
                                double prob_frequency, double prob_dual, const double weights[4],
                                vrl_reward_vector* out);

/* Scores a JSONL file of {"id", "completion"} records against a labels JSONL
 * of instances. Per-line results plus a trailing summary line are written to
 * out_path ("-" or NULL for stdout). Returns VRL_ERR_DATA if any line failed
 * to score (valid lines are still written). */
vrl_status vrl_reward_check(const char* completions_path, const char* labels_path,
                            const char* out_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VERDICT_RL_H */
