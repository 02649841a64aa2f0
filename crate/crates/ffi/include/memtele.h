#ifndef MEMTELE_H
#define MEMTELE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MtStatus {
  MT_STATUS_OK = 0,
  MT_STATUS_NULL_POINTER = 1,
  MT_STATUS_INVALID_ARGUMENT = 2,
  MT_STATUS_UNKNOWN_KEY = 3,
  MT_STATUS_NO_HERALDED_TRIALS = 4,
  MT_STATUS_INTERNAL = 5,
  MT_STATUS_PANIC = 6,
} MtStatus;

/**
 * Input polarization states.
 */
typedef enum MtInput {
  MT_INPUT_H = 0,
  MT_INPUT_V = 1,
  MT_INPUT_PLUS = 2,
  MT_INPUT_MINUS = 3,
  MT_INPUT_R = 4,
  MT_INPUT_L = 5,
} MtInput;

/**
 * Opaque parameter set.
 */
typedef struct MtParams MtParams;

typedef struct MtBudget {
  double s;
  double n_wcp;
  double n_double;
  double kappa;
  double v_eff;
  double fidelity_pred;
  double herald_confidence;
} MtBudget;

typedef struct MtFidelity {
  double fidelity;
  double std_err;
  double n_effective;
  uint64_t n_trials;
} MtFidelity;

typedef struct MtBellReport {
  uint64_t n_random;
  double max_fidelity_error;
  double max_probability_error;
  bool passed;
} MtBellReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *mt_last_error_message(void);

/**
 * New handle holding the default (calibrated) parameters. Free with
 * [`mt_params_free`].
 */
struct MtParams *mt_params_new_default(void);

/**
 * # Safety
 * `params` must be NULL or a handle from [`mt_params_new_default`] that has
 * not been freed.
 */
void mt_params_free(struct MtParams *params);

/**
 * Set a parameter by field name. The whole set is validated; an out-of-range
 * value leaves the handle unchanged.
 *
 * # Safety
 * `params` must be a live handle and `key` a NUL-terminated string.
 */
enum MtStatus mt_params_set(struct MtParams *params, const char *key, double value);

/**
 * # Safety
 * `params` must be a live handle, `key` a NUL-terminated string and `out`
 * writable.
 */
enum MtStatus mt_params_get(const struct MtParams *params, const char *key, double *out);

/**
 * Closed-form noise budget of `input` after `storage_time_us`.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum MtStatus mt_budget(const struct MtParams *params,
                        enum MtInput input,
                        double storage_time_us,
                        struct MtBudget *out);

/**
 * Conditioned Monte Carlo fidelity, run until `target_effective` effective
 * heralded trials. Deterministic in `seed` for any `workers`.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum MtStatus mt_simulate_fidelity(const struct MtParams *params,
                                   enum MtInput input,
                                   double storage_time_us,
                                   uint64_t seed,
                                   uint64_t target_effective,
                                   uint32_t workers,
                                   struct MtFidelity *out);

/**
 * Check the teleportation identity on `n_random` random inputs plus the six
 * poles.
 *
 * # Safety
 * `out` must be writable.
 */
enum MtStatus mt_verify_bell_identity(uint64_t n_random, uint64_t seed, struct MtBellReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMTELE_H */
