#ifndef RELAYBF_H
#define RELAYBF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RbfStatus {
  RBF_STATUS_OK = 0,
  RBF_STATUS_NULL_POINTER = 1,
  RBF_STATUS_INVALID_ARGUMENT = 2,
  RBF_STATUS_DIMENSION_MISMATCH = 3,
  RBF_STATUS_NUMERICAL = 4,
  RBF_STATUS_IO = 5,
  RBF_STATUS_PANIC = 6,
} RbfStatus;

/**
 * Relay selection algorithm.
 */
typedef enum RbfAlgorithm {
  /**
   * All relays.
   */
  RBF_ALGORITHM_NONE = 0,
  /**
   * Random selection of `n_select` relays.
   */
  RBF_ALGORITHM_RRRS = 1,
  /**
   * Exhaustive search.
   */
  RBF_ALGORITHM_RESRS = 2,
  /**
   * Greedy backward elimination.
   */
  RBF_ALGORITHM_RGSRS = 3,
} RbfAlgorithm;

/**
 * One channel realization.
 */
typedef struct RbfChannel RbfChannel;

/**
 * Network, covariance model and experiment settings.
 */
typedef struct RbfConfig RbfConfig;

/**
 * Selected relays, weights and SINR.
 */
typedef struct RbfSelection RbfSelection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rbf_version(void);

/**
 * Message for the most recent failed call on this thread, or an empty
 * string. Valid until the next `rbf_*` call on the same thread.
 */
const char *rbf_last_error(void);

/**
 * Creates a configuration for experiment `kind` (`sinr_vs_snr`,
 * `sinr_vs_m` or `ber_vs_snr`). `toml` holds config-file keys and may be
 * null for defaults.
 *
 * # Safety
 * `kind` and `toml` (if not null) must be NUL-terminated strings; `out`
 * must be a valid pointer.
 */
enum RbfStatus rbf_config_new(const char *kind, const char *toml, struct RbfConfig **out);

/**
 * Number of relays `M`.
 *
 * # Safety
 * `cfg` must be a live handle or null (returns 0).
 */
size_t rbf_config_relays(const struct RbfConfig *cfg);

/**
 * Number of sources `K`.
 *
 * # Safety
 * `cfg` must be a live handle or null (returns 0).
 */
size_t rbf_config_sources(const struct RbfConfig *cfg);

/**
 * # Safety
 * `cfg` must come from `rbf_config_new` and not be used afterwards.
 */
void rbf_config_free(struct RbfConfig *cfg);

/**
 * Draws the channel used by trial `trial` of the configured seed.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be a valid pointer.
 */
enum RbfStatus rbf_channel_draw(const struct RbfConfig *cfg,
                                uint64_t trial,
                                struct RbfChannel **out);

/**
 * Builds a channel from explicit coefficients. `f_re`/`f_im` hold the
 * `m×k` source-to-relay matrix in row-major order; `g_re`/`g_im` the `m`
 * relay-to-destination gains.
 *
 * # Safety
 * The arrays must hold `m*k` and `m` elements; `out` must be valid.
 */
enum RbfStatus rbf_channel_from_arrays(size_t m,
                                       size_t k,
                                       const double *f_re,
                                       const double *f_im,
                                       const double *g_re,
                                       const double *g_im,
                                       struct RbfChannel **out);

/**
 * Number of relays in the channel.
 *
 * # Safety
 * `ch` must be a live handle or null (returns 0).
 */
size_t rbf_channel_relays(const struct RbfChannel *ch);

/**
 * # Safety
 * `ch` must come from an `rbf_channel_*` constructor and not be used afterwards.
 */
void rbf_channel_free(struct RbfChannel *ch);

/**
 * Runs `algorithm` on `ch`. `trial` keys the random stream used by RRRS.
 *
 * # Safety
 * `cfg` and `ch` must be live handles; `out` must be valid.
 */
enum RbfStatus rbf_select(const struct RbfConfig *cfg,
                          const struct RbfChannel *ch,
                          enum RbfAlgorithm algorithm,
                          uint64_t trial,
                          struct RbfSelection **out);

/**
 * Solves for the weights of a fixed subset. `mask` holds `len` bytes,
 * nonzero meaning selected; null selects every relay.
 *
 * # Safety
 * `mask` (if not null) must hold `len` bytes; handles must be live; `out`
 * must be valid.
 */
enum RbfStatus rbf_solve(const struct RbfConfig *cfg,
                         const struct RbfChannel *ch,
                         const uint8_t *mask,
                         size_t len,
                         struct RbfSelection **out);

/**
 * SINR the weights were designed for (linear).
 *
 * # Safety
 * `sel` must be a live handle; `sinr` must be valid.
 */
enum RbfStatus rbf_selection_sinr(const struct RbfSelection *sel, double *sinr);

/**
 * Number of beamforming solves the selection performed.
 *
 * # Safety
 * `sel` must be a live handle or null (returns 0).
 */
size_t rbf_selection_solver_calls(const struct RbfSelection *sel);

/**
 * Writes the 0/1 selection mask into `mask[0..len]`; `len` must equal `M`.
 *
 * # Safety
 * `sel` must be a live handle; `mask` must hold `len` bytes.
 */
enum RbfStatus rbf_selection_mask(const struct RbfSelection *sel, uint8_t *mask, size_t len);

/**
 * Writes the weight vector `w̃` into `re[0..len]`, `im[0..len]`; deselected
 * relays get zero. A relay applies the conjugate of its entry.
 *
 * # Safety
 * `sel` must be a live handle; `re` and `im` must hold `len` doubles.
 */
enum RbfStatus rbf_selection_weights(const struct RbfSelection *sel,
                                     double *re,
                                     double *im,
                                     size_t len);

/**
 * # Safety
 * `sel` must come from `rbf_select`/`rbf_solve` and not be used afterwards.
 */
void rbf_selection_free(struct RbfSelection *sel);

/**
 * Runs the configured experiment on `threads` workers and returns the curve
 * as CSV text in `*csv`, to be released with `rbf_string_free`.
 *
 * # Safety
 * `cfg` must be a live handle; `csv` must be valid.
 */
enum RbfStatus rbf_run_experiment(const struct RbfConfig *cfg, size_t threads, char **csv);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void rbf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELAYBF_H */
