#ifndef TOPOFREQ_H
#define TOPOFREQ_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum TfStatus {
  TF_STATUS_OK = 0,
  TF_STATUS_INVALID_ARGUMENT = 1,
  TF_STATUS_DEGENERACY = 2,
  TF_STATUS_CRITICAL_POINT = 3,
  TF_STATUS_CONTRACT = 4,
  TF_STATUS_CONFIG = 5,
  TF_STATUS_IO = 6,
  TF_STATUS_ENSEMBLE_ABORTED = 7,
  TF_STATUS_NULL_POINTER = 8,
  TF_STATUS_BUFFER_TOO_SMALL = 9,
  TF_STATUS_PANIC = 10,
} TfStatus;

/**
 * Time series stored in a [`TfResult`].
 */
typedef enum TfSeries {
  /**
   * Sample times (s)
   */
  TF_SERIES_TIMES = 0,
  /**
   * Mean work of tone 1 (rad/s)
   */
  TF_SERIES_WORK1 = 1,
  /**
   * Mean work of tone 2 (rad/s)
   */
  TF_SERIES_WORK2 = 2,
  /**
   * Mean eigenstate fidelity
   */
  TF_SERIES_FIDELITY = 3,
} TfSeries;

/**
 * Opaque experiment description.
 */
typedef struct TfExperiment TfExperiment;

/**
 * Opaque ensemble output.
 */
typedef struct TfResult TfResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tf_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length
 * excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t tf_last_error_message(char *buf, size_t len);

/**
 * Experiment with default parameters (noise-free, no decoupling).
 */
struct TfExperiment *tf_experiment_new(void);

/**
 * Parses an experiment file given as NUL-terminated TOML text.
 *
 * # Safety
 * `toml` must be a valid C string and `out` a valid pointer.
 */
enum TfStatus tf_experiment_from_toml(const char *toml, struct TfExperiment **out);

/**
 * Releases an experiment handle. Null is ignored.
 *
 * # Safety
 * `h` must come from this library and not be used afterwards.
 */
void tf_experiment_free(struct TfExperiment *h);

/**
 * # Safety
 * `h` must be a valid experiment handle.
 */
enum TfStatus tf_experiment_set_m(struct TfExperiment *h, double m);

/**
 * Time step (s), horizon (s) and recording stride.
 *
 * # Safety
 * `h` must be a valid experiment handle.
 */
enum TfStatus tf_experiment_set_integration(struct TfExperiment *h,
                                            double dt,
                                            double t_final,
                                            size_t stride);

/**
 * Enables OU dephasing with coherence time `t2star` (s) and correlation
 * time `tau` (s).
 *
 * # Safety
 * `h` must be a valid experiment handle.
 */
enum TfStatus tf_experiment_set_noise(struct TfExperiment *h, double t2star, double tau);

/**
 * # Safety
 * `h` must be a valid experiment handle.
 */
enum TfStatus tf_experiment_clear_noise(struct TfExperiment *h);

/**
 * Enables σx decoupling pulses every `delta_t` seconds.
 *
 * # Safety
 * `h` must be a valid experiment handle.
 */
enum TfStatus tf_experiment_set_dd(struct TfExperiment *h, double delta_t);

/**
 * # Safety
 * `h` must be a valid experiment handle.
 */
enum TfStatus tf_experiment_clear_dd(struct TfExperiment *h);

/**
 * Ensemble size and base seed (instance `i` uses `seed ^ i`).
 *
 * # Safety
 * `h` must be a valid experiment handle.
 */
enum TfStatus tf_experiment_set_ensemble(struct TfExperiment *h, size_t instances, uint64_t seed);

/**
 * Selects the prepared band: 0 = lower, 1 = upper.
 *
 * # Safety
 * `h` must be a valid experiment handle.
 */
enum TfStatus tf_experiment_set_band(struct TfExperiment *h, int32_t band);

/**
 * Integer Chern number of the lower band for the gap parameter `m`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TfStatus tf_analytic_chern(double m, int32_t *out);

/**
 * Lattice Chern number of the experiment's band over an `n × n` grid.
 *
 * # Safety
 * `h` must be a valid experiment handle and `out` a valid pointer.
 */
enum TfStatus tf_chern_fhs(const struct TfExperiment *h, size_t n, int32_t *out);

/**
 * Minimum band gap (rad/s) over the Floquet zone.
 */
double tf_min_gap(double m, double eta);

/**
 * Runs the ensemble. `workers == 0` uses the default thread pool.
 *
 * # Safety
 * `h` must be a valid experiment handle and `out` a valid pointer.
 */
enum TfStatus tf_run_ensemble(const struct TfExperiment *h, size_t workers, struct TfResult **out);

/**
 * Releases a result handle. Null is ignored.
 *
 * # Safety
 * `h` must come from this library and not be used afterwards.
 */
void tf_result_free(struct TfResult *h);

/**
 * Number of samples in each time series.
 *
 * # Safety
 * `h` must be a valid result handle and `out` a valid pointer.
 */
enum TfStatus tf_result_len(const struct TfResult *h, size_t *out);

/**
 * Successful and failed instance counts.
 *
 * # Safety
 * `h` must be a valid result handle; outputs must be valid pointers.
 */
enum TfStatus tf_result_instances(const struct TfResult *h, size_t *ok, size_t *failed);

/**
 * Mean Chern estimate and its standard error.
 *
 * # Safety
 * `h` must be a valid result handle; outputs must be valid pointers.
 */
enum TfStatus tf_result_chern(const struct TfResult *h, double *mean, double *stderr);

/**
 * Mean pumping rates (rad/s²) with standard errors.
 *
 * # Safety
 * `h` must be a valid result handle; outputs must be valid pointers.
 */
enum TfStatus tf_result_rates(const struct TfResult *h,
                              double *p1,
                              double *p2,
                              double *stderr1,
                              double *stderr2);

/**
 * Copies one series into `buf`, which must hold at least
 * `tf_result_len` values.
 *
 * # Safety
 * `h` must be a valid result handle; `buf` must point to `len` writable
 * doubles.
 */
enum TfStatus tf_result_copy_series(const struct TfResult *h,
                                    enum TfSeries which,
                                    double *buf,
                                    size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPOFREQ_H */
