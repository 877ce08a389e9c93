#ifndef HYPREL_H
#define HYPREL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which defining function truncates the surfaces.
 */
typedef enum HyprelDefiningKind {
  HYPREL_DEFINING_KIND_HEIGHT = 0,
  HYPREL_DEFINING_KIND_SCALED = 1,
  HYPREL_DEFINING_KIND_TILTED = 2,
} HyprelDefiningKind;

typedef enum HyprelStatus {
  HYPREL_STATUS_OK = 0,
  HYPREL_STATUS_NULL_POINTER = 1,
  HYPREL_STATUS_INVALID_ARGUMENT = 2,
  HYPREL_STATUS_NOT_IN_HALF_SPACE = 3,
  HYPREL_STATUS_INCOMPARABLE = 4,
  HYPREL_STATUS_QUADRATURE_BUDGET = 5,
  HYPREL_STATUS_ILL_CONDITIONED = 6,
  HYPREL_STATUS_DIVERGENCE = 7,
  HYPREL_STATUS_GEOMETRY = 8,
  HYPREL_STATUS_INTEGRATOR = 9,
  HYPREL_STATUS_INVALID_STATE = 10,
  HYPREL_STATUS_STEP_REJECTED = 11,
  HYPREL_STATUS_DOMAIN = 12,
  HYPREL_STATUS_CONFIG = 13,
  HYPREL_STATUS_IO = 14,
  HYPREL_STATUS_BUFFER_TOO_SMALL = 15,
  HYPREL_STATUS_PANIC = 99,
} HyprelStatus;

/**
 * Minimal annuli bounded by two concentric circles.
 */
typedef struct HyprelCatenoid HyprelCatenoid;

/**
 * A polar curve evolving by curve shortening flow.
 */
typedef struct HyprelFlow HyprelFlow;

/**
 * `Scaled` uses `center` and `alpha`, `Tilted` uses `beta`.
 */
typedef struct HyprelDefining {
  enum HyprelDefiningKind kind;
  double center;
  double alpha;
  double beta;
} HyprelDefining;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hyprel_version(void);

/**
 * Length in bytes of the last error message of this thread, without the
 * terminating NUL.
 */
size_t hyprel_last_error_length(void);

/**
 * Copy the last error message of this thread into `buf` (truncated to
 * `len − 1` bytes, always NUL-terminated when `len > 0`). Returns the
 * full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t hyprel_last_error_message(char *buf, size_t len);

/**
 * Closed-form relative entropy of two geodesic configurations on the same
 * `count` endpoints. `first` and `second` hold `count` endpoint indices,
 * read as consecutive pairs.
 *
 * # Safety
 * `endpoints`, `first` and `second` must point to `count` readable values.
 */
enum HyprelStatus hyprel_entropy_exact(const double *endpoints,
                                       size_t count,
                                       const size_t *first,
                                       const size_t *second,
                                       double *out);

/**
 * Relative entropy of two geodesic configurations by quadrature of the
 * truncated lengths on the grid `eps_hi, eps_hi·ratio, …, ≥ eps_lo` and
 * extrapolation. `defining` may be null for the height function.
 *
 * # Safety
 * As [`hyprel_entropy_exact`]; `defining` must be null or valid.
 */
enum HyprelStatus hyprel_entropy_numeric(const double *endpoints,
                                         size_t count,
                                         const size_t *first,
                                         const size_t *second,
                                         const struct HyprelDefining *defining,
                                         double eps_hi,
                                         double eps_lo,
                                         double ratio,
                                         double tol,
                                         double *out_value,
                                         double *out_error);

/**
 * Shoot the minimal annuli bounded by circles of radii `r1 ≤ r2 ≤ 4 r1`.
 * On success `*out` owns a handle, possibly with zero surfaces.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum HyprelStatus hyprel_catenoid_shoot(double r1, double r2, struct HyprelCatenoid **out);

/**
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum HyprelStatus hyprel_catenoid_count(const struct HyprelCatenoid *h, size_t *out);

/**
 * Free parameter `a3` of the boundary expansion of surface `index`.
 *
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum HyprelStatus hyprel_catenoid_a3(const struct HyprelCatenoid *h, size_t index, double *out);

/**
 * Renormalized area of surface `index` from a fit of the truncated areas.
 *
 * # Safety
 * `h` must be a live handle; outputs must be writable.
 */
enum HyprelStatus hyprel_catenoid_renormalized_area(const struct HyprelCatenoid *h,
                                                    size_t index,
                                                    double *out_value,
                                                    double *out_uncertainty);

/**
 * # Safety
 * `h` must be null or a handle from [`hyprel_catenoid_shoot`] not yet
 * freed.
 */
void hyprel_catenoid_free(struct HyprelCatenoid *h);

/**
 * Curve `R(θ) = r0 (1 + amplitude·sin²θ)` about `center` on `nodes`
 * interior angles.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum HyprelStatus hyprel_flow_new(double center,
                                  double r0,
                                  size_t nodes,
                                  double amplitude,
                                  struct HyprelFlow **out);

/**
 * One time step of size `dt`. A rejected step leaves the state unchanged.
 *
 * # Safety
 * `h` must be a live handle.
 */
enum HyprelStatus hyprel_flow_step(struct HyprelFlow *h, double dt);

/**
 * Advance by `duration` with equal steps no longer than
 * `dt_factor·Δθ²`.
 *
 * # Safety
 * `h` must be a live handle.
 */
enum HyprelStatus hyprel_flow_advance(struct HyprelFlow *h, double duration, double dt_factor);

/**
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum HyprelStatus hyprel_flow_time(const struct HyprelFlow *h, double *out);

/**
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum HyprelStatus hyprel_flow_nodes(const struct HyprelFlow *h, size_t *out);

/**
 * Copy the nodal radii into `buf`, which must hold at least
 * `hyprel_flow_nodes` values.
 *
 * # Safety
 * `h` must be a live handle; `buf` must point to `len` writable values.
 */
enum HyprelStatus hyprel_flow_values(const struct HyprelFlow *h, double *buf, size_t len);

/**
 * Relative entropy of the curve against the semicircle of radius `r0`.
 *
 * # Safety
 * `h` must be a live handle; outputs must be writable.
 */
enum HyprelStatus hyprel_flow_entropy(const struct HyprelFlow *h,
                                      double *out_value,
                                      double *out_error);

/**
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum HyprelStatus hyprel_flow_max_curvature(const struct HyprelFlow *h, double *out);

/**
 * # Safety
 * `h` must be null or a handle from [`hyprel_flow_new`] not yet freed.
 */
void hyprel_flow_free(struct HyprelFlow *h);

/**
 * Run a command of the command line tool. `config_json` may be null.
 * `*out_exit_code` receives the process exit status the tool would use
 * (also when the run itself fails).
 *
 * # Safety
 * Strings must be NUL-terminated; `out_exit_code` must be writable.
 */
enum HyprelStatus hyprel_run(const char *command,
                             const char *config_json,
                             const char *out_dir,
                             int32_t *out_exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPREL_H */
