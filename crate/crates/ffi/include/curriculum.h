#ifndef CURRICULUM_H
#define CURRICULUM_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CurStatus {
  CUR_STATUS_OK = 0,
  CUR_STATUS_NULL_ARGUMENT = 1,
  CUR_STATUS_INVALID_UTF8 = 2,
  CUR_STATUS_CONFIG = 3,
  CUR_STATUS_IO = 4,
  CUR_STATUS_PARSE = 5,
  CUR_STATUS_NUMERIC_FAULT = 6,
  CUR_STATUS_OUT_OF_RANGE = 7,
  CUR_STATUS_INTERNAL = 8,
} CurStatus;

/**
 * An experiment configuration.
 */
typedef struct CurConfig CurConfig;

/**
 * Per-trial costs and the learning curve of a finished experiment.
 */
typedef struct CurResults CurResults;

typedef struct CurCurvePoint {
  size_t episode;
  double mean_cost;
  double std_error;
  size_t n_trials;
} CurCurvePoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `len` bytes. Returns the full
 * message length plus one, or 0 when the last call succeeded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t cur_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cur_version(void);

/**
 * The default configuration: basic agent, finite-state representation.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum CurStatus cur_config_default(struct CurConfig **out);

/**
 * Reads a TOML config file.
 *
 * # Safety
 * `path` must be null or a NUL-terminated string; `out` null or writable.
 */
enum CurStatus cur_config_load(const char *path, struct CurConfig **out);

/**
 * Parses a TOML config from a string.
 *
 * # Safety
 * `toml` must be null or a NUL-terminated string; `out` null or writable.
 */
enum CurStatus cur_config_parse(const char *toml, struct CurConfig **out);

/**
 * # Safety
 * `cfg` must be null or a handle from this library not yet freed.
 */
void cur_config_free(struct CurConfig *cfg);

/**
 * # Safety
 * `cfg` must be null or a live handle.
 */
enum CurStatus cur_config_set_trials(struct CurConfig *cfg, size_t trials);

/**
 * # Safety
 * `cfg` must be null or a live handle.
 */
enum CurStatus cur_config_set_episodes(struct CurConfig *cfg, size_t episodes);

/**
 * # Safety
 * `cfg` must be null or a live handle.
 */
enum CurStatus cur_config_set_seed(struct CurConfig *cfg, uint64_t seed);

/**
 * Sets the agent: `basic`, `action-dependent` or `rope`.
 *
 * # Safety
 * `cfg` must be null or a live handle; `name` null or NUL-terminated.
 */
enum CurStatus cur_config_set_agent(struct CurConfig *cfg, const char *name);

/**
 * Sets the representation (`finite-state`, `continuous`, `naive:N`) and
 * clears any baseline.
 *
 * # Safety
 * `cfg` must be null or a live handle; `name` null or NUL-terminated.
 */
enum CurStatus cur_config_set_repr(struct CurConfig *cfg, const char *name);

/**
 * Runs the `no-curriculum` baseline instead of a learned curriculum.
 *
 * # Safety
 * `cfg` must be null or a live handle; `name` null or NUL-terminated.
 */
enum CurStatus cur_config_set_baseline(struct CurConfig *cfg, const char *name);

/**
 * Sets the source stop rule: `convergence`, `convergence:PATIENCE`, `fixed:N` or `return:RHO`.
 *
 * # Safety
 * `cfg` must be null or a live handle; `rule` null or NUL-terminated.
 */
enum CurStatus cur_config_set_source_stop(struct CurConfig *cfg, const char *rule);

/**
 * Sets the transfer method: `value-function` or `reward-shaping`.
 *
 * # Safety
 * `cfg` must be null or a live handle; `name` null or NUL-terminated.
 */
enum CurStatus cur_config_set_transfer(struct CurConfig *cfg, const char *name);

/**
 * Records per-selection transitions and writes them to `path` after a run.
 * A null `path` turns logging off.
 *
 * # Safety
 * `cfg` must be null or a live handle; `path` null or NUL-terminated.
 */
enum CurStatus cur_config_set_transitions(struct CurConfig *cfg, const char *path);

/**
 * # Safety
 * `cfg` must be null or a live handle.
 */
enum CurStatus cur_config_validate(const struct CurConfig *cfg);

/**
 * Runs every trial of `cfg` on `threads` workers, or all cores when 0.
 * Results do not depend on the thread count. Writes the learning curve
 * and transition log when the config names output paths.
 *
 * # Safety
 * `cfg` must be null or a live handle; `out` null or writable.
 */
enum CurStatus cur_experiment_run(const struct CurConfig *cfg,
                                  size_t threads,
                                  struct CurResults **out);

/**
 * # Safety
 * `r` must be null or a handle from this library not yet freed.
 */
void cur_results_free(struct CurResults *r);

/**
 * Number of trials, or 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t cur_results_trials(const struct CurResults *r);

/**
 * Curriculum episodes per trial, or 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t cur_results_episodes(const struct CurResults *r);

/**
 * Cost of curriculum episode `episode` (0-based) in trial `trial`.
 *
 * # Safety
 * `r` must be null or a live handle; `out` null or writable.
 */
enum CurStatus cur_results_cost(const struct CurResults *r,
                                size_t trial,
                                size_t episode,
                                double *out);

/**
 * Learning-curve point for episode `episode` (0-based).
 *
 * # Safety
 * `r` must be null or a live handle; `out` null or writable.
 */
enum CurStatus cur_results_curve_point(const struct CurResults *r,
                                       size_t episode,
                                       struct CurCurvePoint *out);

/**
 * Writes the learning curve as CSV.
 *
 * # Safety
 * `r` must be null or a live handle; `path` null or NUL-terminated.
 */
enum CurStatus cur_results_write_curve(const struct CurResults *r, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURRICULUM_H */
