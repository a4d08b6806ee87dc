#ifndef CLG_H
#define CLG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum ClgStatus {
  CLG_STATUS_OK = 0,
  CLG_STATUS_NULL_POINTER = 1,
  CLG_STATUS_USAGE = 2,
  CLG_STATUS_CONTRACT = 3,
  CLG_STATUS_DOMAIN = 4,
  CLG_STATUS_NO_CONVERGENCE = 5,
  CLG_STATUS_INSUFFICIENT = 6,
  CLG_STATUS_CONFIG = 7,
  CLG_STATUS_IO = 8,
  CLG_STATUS_PANIC = 9,
} ClgStatus;

/**
 * Lattice boundary mode.
 */
typedef enum ClgMode {
  CLG_MODE_PERIODIC = 0,
  CLG_MODE_OPEN = 1,
  CLG_MODE_CYLINDER = 2,
} ClgMode;

/**
 * Why a run stopped.
 */
typedef enum ClgStop {
  CLG_STOP_TIME = 0,
  CLG_STOP_EVENTS = 1,
  CLG_STOP_ABSORBED = 2,
} ClgStop;

/**
 * Opaque handle to a finished experiment.
 */
typedef struct ClgExperiment ClgExperiment;

/**
 * Opaque simulation handle.
 */
typedef struct ClgSimulation ClgSimulation;

/**
 * Scalar observables of the current configuration.
 */
typedef struct ClgObservables {
  double rho;
  double rho_a;
  double activity;
  double sigma_hat;
  bool absorbed;
} ClgObservables;

/**
 * One-dimensional closed forms at density `rho`.
 */
typedef struct ClgExact1d {
  double rho;
  double rho_a;
  double activity;
  double diffusion;
  double compressibility;
  double conductivity;
  double xi_cross;
  double xi_perp;
} ClgExact1d;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *clg_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *clg_version(void);

/**
 * Periodic simulation from `n` uniformly placed particles.
 */
enum ClgStatus clg_simulation_new_uniform(size_t dim,
                                          size_t side,
                                          size_t n,
                                          uint64_t seed,
                                          uint64_t replica,
                                          struct ClgSimulation **out);

/**
 * Periodic simulation from a 0/1 occupancy array of length `side^dim`,
 * sites ordered with the first coordinate slowest.
 *
 * # Safety
 * `occupancy` must point to `len` readable bytes.
 */
enum ClgStatus clg_simulation_new_from_occupancy(size_t dim,
                                                 size_t side,
                                                 const uint8_t *occupancy,
                                                 size_t len,
                                                 uint64_t seed,
                                                 uint64_t replica,
                                                 struct ClgSimulation **out);

/**
 * Boundary-driven simulation: reservoir density `left` on the face
 * `i_1 = 1` and `right` on `i_1 = L`, Bernoulli(`rho0`) initial state.
 */
enum ClgStatus clg_simulation_new_driven(size_t dim,
                                         size_t side,
                                         enum ClgMode mode,
                                         double left,
                                         double right,
                                         double rho0,
                                         uint64_t seed,
                                         uint64_t replica,
                                         struct ClgSimulation **out);

/**
 * # Safety
 * `sim` must be null or a handle from a `clg_simulation_new_*` call that
 * has not been freed.
 */
void clg_simulation_free(struct ClgSimulation *sim);

/**
 * Advances by `events` events or until absorption.
 *
 * # Safety
 * `sim` must be a live handle; `stop` may be null.
 */
enum ClgStatus clg_simulation_run_events(struct ClgSimulation *sim,
                                         uint64_t events,
                                         enum ClgStop *stop);

/**
 * Advances to absolute time `t` or until absorption.
 *
 * # Safety
 * `sim` must be a live handle; `stop` may be null.
 */
enum ClgStatus clg_simulation_run_until(struct ClgSimulation *sim, double t, enum ClgStop *stop);

/**
 * Current time and event count; either output may be null.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum ClgStatus clg_simulation_clock(const struct ClgSimulation *sim,
                                    double *time,
                                    uint64_t *events);

/**
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum ClgStatus clg_simulation_observables(const struct ClgSimulation *sim,
                                          struct ClgObservables *out);

/**
 * Copies the occupancy into `buf`, which must hold `side^dim` bytes.
 *
 * # Safety
 * `sim` must be a live handle and `buf` must point to `len` writable bytes.
 */
enum ClgStatus clg_simulation_occupancy(const struct ClgSimulation *sim, uint8_t *buf, size_t len);

/**
 * Closed-form one-dimensional observables at density `rho`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ClgStatus clg_exact_1d(double rho, struct ClgExact1d *out);

/**
 * Solves the discrete Dirichlet problem with left/right reservoir data.
 * `per_site` selects one reservoir coupling per boundary site instead of
 * one per mirror neighbour. Writes `side^dim` values to `out`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum ClgStatus clg_dirichlet_left_right(size_t dim,
                                        size_t side,
                                        enum ClgMode mode,
                                        double left,
                                        double right,
                                        bool per_site,
                                        double *out,
                                        size_t len);

/**
 * Runs an experiment from TOML config text. With a non-null `out_dir` the
 * outputs are written there.
 *
 * # Safety
 * `config_toml` must be a nul-terminated string; `out_dir` null or one.
 */
enum ClgStatus clg_experiment_run(const char *config_toml,
                                  const char *out_dir,
                                  struct ClgExperiment **out);

/**
 * Manifest of a finished experiment as JSON, owned by the handle.
 *
 * # Safety
 * `exp` must be a live handle or null (which yields null).
 */
const char *clg_experiment_manifest_json(const struct ClgExperiment *exp);

/**
 * # Safety
 * `exp` must be null or a live handle from [`clg_experiment_run`].
 */
void clg_experiment_free(struct ClgExperiment *exp);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLG_H */
