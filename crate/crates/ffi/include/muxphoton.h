#ifndef MUXPHOTON_H
#define MUXPHOTON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define MP_TOPOLOGY_BINARY_DELAY 0

#define MP_TOPOLOGY_SINGLE_DELAY_LINE 1

#define MP_DETECTION_SINGLE_DETECTOR 0

#define MP_DETECTION_DETECTOR_ARRAY 1

#define MP_SELECTION_FIRST_PHOTON 0

#define MP_SELECTION_LAST_PHOTON 1

/**
 * Four heralded sources.
 */
#define MP_BELL_HBS4 0

/**
 * Two sources with post-selection.
 */
#define MP_BELL_POST_SELECTED2 1

#define MP_PAIR_DIST_POISSON 0

#define MP_PAIR_DIST_THERMAL_APPROX 1

/**
 * Result of every call.
 */
typedef enum MpStatus {
  MP_STATUS_OK = 0,
  MP_STATUS_NULL_POINTER = 1,
  MP_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A value lies outside the range where the model is defined.
   */
  MP_STATUS_DOMAIN = 3,
  MP_STATUS_CONFIG = 4,
  /**
   * The caller's buffer is too short; the required size was still reported.
   */
  MP_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * The library panicked; the handle involved should not be reused.
   */
  MP_STATUS_PANIC = 6,
} MpStatus;

/**
 * Source parameters. Starts from the library defaults.
 */
typedef struct MpParams MpParams;

/**
 * Frame size, delay topology, detection protocol and selection policy.
 */
typedef struct MpScheme MpScheme;

/**
 * Summary of a Monte Carlo run.
 */
typedef struct MpEstimate {
  double eta_hat;
  double std_err;
  uint64_t n_trials;
  uint64_t single_count;
  uint64_t multi_count;
  uint64_t vacuum_count;
} MpEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a parameter set with the library defaults.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum MpStatus mp_params_new(struct MpParams **out);

/**
 * Creates a lossless parameter set: all efficiencies one, no delay loss.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum MpStatus mp_params_ideal(double lambda, struct MpParams **out);

/**
 * Sets one parameter by name. Flags and `pair_dist` take integral values.
 * The handle is unchanged if the new value is rejected.
 *
 * # Safety
 * `params` must come from `mp_params_new`; `key` must be a NUL-terminated string.
 */
enum MpStatus mp_params_set(struct MpParams *params, const char *key, double value);

/**
 * Reads one parameter by name.
 *
 * # Safety
 * `params` must come from `mp_params_new`; `key` must be a NUL-terminated string.
 */
enum MpStatus mp_params_get(const struct MpParams *params, const char *key, double *out);

/**
 * Releases a parameter set. Null is ignored.
 *
 * # Safety
 * `params` must come from `mp_params_new` and not be used afterwards.
 */
void mp_params_free(struct MpParams *params);

/**
 * Creates a scheme whose selection policy follows the detection protocol.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum MpStatus mp_scheme_new(size_t n_bins,
                            int32_t topology_kind,
                            int32_t detection_kind,
                            struct MpScheme **out);

/**
 * Overrides the native selection policy.
 *
 * # Safety
 * `scheme` must come from `mp_scheme_new`.
 */
enum MpStatus mp_scheme_set_selection(struct MpScheme *scheme, int32_t selection_kind);

/**
 * Releases a scheme. Null is ignored.
 *
 * # Safety
 * `scheme` must come from `mp_scheme_new` and not be used afterwards.
 */
void mp_scheme_free(struct MpScheme *scheme);

/**
 * Probability that a frame emits exactly one photon.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum MpStatus mp_total_efficiency(const struct MpParams *params,
                                  const struct MpScheme *scheme,
                                  double *out);

/**
 * Probability that bin `r` (1-based) supplies the single output photon.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum MpStatus mp_bin_success(const struct MpParams *params,
                             const struct MpScheme *scheme,
                             size_t r,
                             double *out);

/**
 * Effective heralding efficiency of a detection protocol.
 *
 * # Safety
 * `params` must be live; `out` must be valid for writes.
 */
enum MpStatus mp_detection_efficiency(const struct MpParams *params,
                                      int32_t detection_kind,
                                      double *out);

/**
 * Output photon rate in Hz.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum MpStatus mp_generation_rate(const struct MpParams *params,
                                 const struct MpScheme *scheme,
                                 double *out);

/**
 * Mean delay-line transmission of the selected photon.
 *
 * # Safety
 * `params` must be live; `out` must be valid for writes.
 */
enum MpStatus mp_avg_lin(const struct MpParams *params,
                         size_t n_bins,
                         int32_t selection_kind,
                         double lambda,
                         double *out);

/**
 * Monte Carlo estimate of the total efficiency. Reproducible for a given seed.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum MpStatus mp_estimate_eta(const struct MpParams *params,
                              const struct MpScheme *scheme,
                              uint64_t n_trials,
                              uint64_t seed,
                              struct MpEstimate *out);

/**
 * Bell-state success probability with sources of efficiency `eta`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MpStatus mp_composed_success(double eta, int32_t scheme_kind, double *out);

/**
 * Switch phases for every bin of a power-of-two frame.
 *
 * Row `r - 1` holds the settings for bin `r`, one byte per switch, 1 for
 * a π phase. `*switches` always receives the row length; when `len` is
 * below `n_bins * *switches` nothing else is written.
 *
 * # Safety
 * `buf` must be valid for `len` bytes; `switches` must be valid for writes.
 */
enum MpStatus mp_phase_schedule(size_t n_bins, uint8_t *buf, size_t len, size_t *switches);

/**
 * Last-photon selection on one frame of herald bits.
 *
 * `bits[r - 1]` is nonzero when bin `r` heralded. `out_bits` receives the
 * one-hot decision and `*bin` the selected bin, or 0 when nothing fired.
 *
 * # Safety
 * `bits` and `out_bits` must be valid for `n_bins` bytes; `bin` must be valid for writes.
 */
enum MpStatus mp_select_last(const uint8_t *bits, size_t n_bins, uint8_t *out_bits, size_t *bin);

/**
 * Probability of exactly `n` pairs in one bin.
 *
 * # Safety
 * `params` must be live; `out` must be valid for writes.
 */
enum MpStatus mp_pair_count_distribution(const struct MpParams *params, int64_t n, double *out);

/**
 * Copies the last failure message of this thread into `buf`, truncated and
 * NUL-terminated. Returns the full message length without the terminator,
 * so a caller can size its buffer with a first call using `len = 0`.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t mp_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MUXPHOTON_H */
