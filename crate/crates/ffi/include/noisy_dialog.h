/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef NOISY_DIALOG_H
#define NOISY_DIALOG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of the C interface.
 */
typedef enum NdStatus {
  ND_STATUS_OK = 0,
  ND_STATUS_NULL_POINTER = 1,
  ND_STATUS_INVALID_ARGUMENT = 2,
  ND_STATUS_IO = 3,
  /**
   * A bug: the library panicked. The message says where.
   */
  ND_STATUS_INTERNAL = 4,
} NdStatus;

/**
 * Simulation parameters. Create with [`nd_config_new`].
 */
typedef struct NdConfig NdConfig;

/**
 * Per-trial results of one batch. Create with [`nd_run`].
 */
typedef struct NdResults NdResults;

/**
 * One trial, flattened for C.
 */
typedef struct NdTrialSummary {
  uint64_t trial;
  uint64_t seed;
  bool success;
  uint64_t total_rounds;
  /**
   * total_rounds / depth − 1.
   */
  double overhead;
  /**
   * Larger of the two parties' peaks.
   */
  uint64_t peak_memory_bits;
  uint64_t jumps;
  uint64_t budget_spent;
  uint64_t budget_limit;
  uint64_t max_rewind;
  uint64_t small_collisions;
  uint64_t big_collisions;
} NdTrialSummary;

/**
 * Outcome of a paired MP3-on/MP3-off attack experiment.
 */
typedef struct NdAttackSummary {
  double success_rate_on;
  double success_rate_off;
  uint64_t pairs_off_larger;
  uint64_t pairs_on_larger;
  double sign_test_p;
} NdAttackSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a configuration with default constants. Parameters are validated
 * when a run starts, so keys can be set in any order.
 *
 * # Safety
 * `out` must be null or valid for writing one pointer.
 */
enum NdStatus nd_config_new(double epsilon, uint64_t depth, struct NdConfig **out);

/**
 * Sets one configuration key, using the names of the CLI's config files
 * (`states`, `mp3_enabled`, `vote_rule`, ...).
 *
 * # Safety
 * `config` must come from [`nd_config_new`]; `key` and `value` must be null
 * or NUL-terminated strings.
 */
enum NdStatus nd_config_set(struct NdConfig *config, const char *key, const char *value);

/**
 * # Safety
 * `config` must be null or come from [`nd_config_new`] and not be used again.
 */
void nd_config_free(struct NdConfig *config);

/**
 * Runs `trials` seeded trials (trial i uses `seed + i`) against the named
 * adversary, e.g. `"noise_free"`, `"random_flip:0.001"` or `"sneaky"`.
 *
 * # Safety
 * `config` must come from [`nd_config_new`], `adversary` must be a
 * NUL-terminated string and `out` valid for writing one pointer.
 */
enum NdStatus nd_run(const struct NdConfig *config,
                     const char *adversary,
                     uint64_t trials,
                     uint64_t seed,
                     struct NdResults **out);

/**
 * Number of trials held; 0 for a null handle.
 *
 * # Safety
 * `results` must be null or come from [`nd_run`].
 */
size_t nd_results_len(const struct NdResults *results);

/**
 * Copies trial `index` into `out`.
 *
 * # Safety
 * `results` must come from [`nd_run`]; `out` must be valid for writing.
 */
enum NdStatus nd_results_get(const struct NdResults *results,
                             size_t index,
                             struct NdTrialSummary *out);

/**
 * Writes the per-trial CSV the CLI produces.
 *
 * # Safety
 * `results` must come from [`nd_run`]; `path` must be a NUL-terminated string.
 */
enum NdStatus nd_results_write_csv(const struct NdResults *results, const char *path);

/**
 * # Safety
 * `results` must be null or come from [`nd_run`] and not be used again.
 */
void nd_results_free(struct NdResults *results);

/**
 * Runs the attack with the third meeting point enabled and disabled on the
 * same seeds and summarises the comparison.
 *
 * # Safety
 * As for [`nd_run`]; `out` must be valid for writing.
 */
enum NdStatus nd_attack(const struct NdConfig *config,
                        const char *adversary,
                        uint64_t trials,
                        uint64_t seed,
                        struct NdAttackSummary *out);

/**
 * Copies the calling thread's last error message into `buf` (truncated and
 * always NUL-terminated when `len > 0`). Returns the full message length
 * plus one for the terminator, or 0 if no error has been recorded.
 *
 * # Safety
 * `buf` must be null or valid for writing `len` bytes.
 */
size_t nd_last_error_message(char *buf, size_t len);

/**
 * The library version as a static NUL-terminated string.
 */
const char *nd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOISY_DIALOG_H */
