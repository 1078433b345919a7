#ifndef OPMLAB_H
#define OPMLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum OpmStatus {
  OPM_STATUS_OK = 0,
  OPM_STATUS_NULL_POINTER = 1,
  OPM_STATUS_INVALID_ARGUMENT = 2,
  OPM_STATUS_INVALID_GEOMETRY = 3,
  /*
   The point is inside the curve or below the admissible radius.
   */
  OPM_STATUS_OUTSIDE_DOMAIN = 4,
  OPM_STATUS_CURVE_REQUIRED = 5,
  OPM_STATUS_EMPTY_SUPPORT = 6,
  OPM_STATUS_RANK_DEFICIENT = 7,
  OPM_STATUS_ILL_CONDITIONED = 8,
  OPM_STATUS_NOT_OPTIMAL = 9,
  /*
   The solver hit its iteration cap. A solution handle is still returned.
   */
  OPM_STATUS_MAX_ITERS = 10,
  OPM_STATUS_NO_CONVERGENCE = 11,
  OPM_STATUS_TOO_CLOSE_TO_BOUNDARY = 12,
  OPM_STATUS_NOT_SZEGO_CLASS = 13,
  /*
   Caller buffer is too small; nothing was written.
   */
  OPM_STATUS_BUFFER_TOO_SMALL = 14,
  OPM_STATUS_PANIC = 99,
} OpmStatus;

/*
 Opaque boundary geometry.
 */
typedef struct OpmGeometry OpmGeometry;

/*
 Opaque discrete probability measure.
 */
typedef struct OpmMeasure OpmMeasure;

/*
 Opaque solver result.
 */
typedef struct OpmSolutionHandle OpmSolutionHandle;

typedef struct OpmComplex {
  double re;
  double im;
} OpmComplex;

/*
 Summary of a solved optimal prediction measure.
 */
typedef struct OpmSolutionInfo {
  size_t degree;
  double objective;
  double certificate_gap;
  size_t iterations;
  size_t support_size;
  size_t grid_size;
} OpmSolutionInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *opm_version(void);

/*
 Copies the last error message of this thread into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length including the NUL,
 or 0 when there is no error.

 # Safety
 `buf` must be valid for `len` bytes or null.
 */
size_t opm_last_error_message(char *buf, size_t len);

/*
 # Safety
 `out` must be valid for writes.
 */
enum OpmStatus opm_geometry_circle(struct OpmGeometry **out);

/*
 # Safety
 `out` must be valid for writes.
 */
enum OpmStatus opm_geometry_interval(struct OpmGeometry **out);

/*
 Ellipse with semi-axes `a > b > 0`.

 # Safety
 `out` must be valid for writes.
 */
enum OpmStatus opm_geometry_ellipse(double a, double b, struct OpmGeometry **out);

/*
 Curve with exterior map `capacity * w + center + sum_k tail[k-1] w^-k`.

 # Safety
 `tail` must point to `tail_len` values (or be null when `tail_len` is 0);
 `out` must be valid for writes.
 */
enum OpmStatus opm_geometry_laurent(double capacity,
                                    struct OpmComplex center,
                                    const struct OpmComplex *tail,
                                    size_t tail_len,
                                    struct OpmGeometry **out);

/*
 # Safety
 `geom` must come from an `opm_geometry_*` constructor and not be used afterwards.
 */
void opm_geometry_free(struct OpmGeometry *geom);

/*
 Exterior conformal map `Phi(z)`.

 # Safety
 `geom` must be a live handle and `out` valid for writes.
 */
enum OpmStatus opm_exterior_map(const struct OpmGeometry *geom,
                                struct OpmComplex z,
                                struct OpmComplex *out);

/*
 Writes `m` boundary nodes into `nodes`.

 # Safety
 `geom` must be a live handle and `nodes` valid for `m` writes.
 */
enum OpmStatus opm_discretize_boundary(const struct OpmGeometry *geom,
                                       size_t m,
                                       struct OpmComplex *nodes);

/*
 Probability measure from nodes and nonnegative weights (normalized to mass 1).

 # Safety
 `nodes` and `weights` must point to `len` values; `out` must be valid for writes.
 */
enum OpmStatus opm_measure_new(const struct OpmComplex *nodes,
                               const double *weights,
                               size_t len,
                               struct OpmMeasure **out);

/*
 Discretized balayage of the point mass at `z0` onto the boundary (closed curves).

 # Safety
 `geom` must be a live handle and `out` valid for writes.
 */
enum OpmStatus opm_measure_balayage(const struct OpmGeometry *geom,
                                    struct OpmComplex z0,
                                    size_t m,
                                    struct OpmMeasure **out);

/*
 Number of atoms in the measure; 0 for a null handle.

 # Safety
 `mu` must be a live handle or null.
 */
size_t opm_measure_len(const struct OpmMeasure *mu);

/*
 Copies atoms into caller buffers of capacity `len`.

 # Safety
 `mu` must be a live handle; `nodes` and `weights` valid for `len` writes.
 */
enum OpmStatus opm_measure_copy(const struct OpmMeasure *mu,
                                struct OpmComplex *nodes,
                                double *weights,
                                size_t len);

/*
 # Safety
 `mu` must come from this library and not be used afterwards.
 */
void opm_measure_free(struct OpmMeasure *mu);

/*
 Bergman function `B_n(mu, z)` and Christoffel function `1 / B_n`.

 # Safety
 `mu` must be a live handle; the outputs must be valid for writes or null.
 */
enum OpmStatus opm_bergman(const struct OpmMeasure *mu,
                           size_t n,
                           struct OpmComplex z,
                           double *bergman,
                           double *christoffel);

/*
 Solves for the optimal prediction measure of degree `n` at `z0` on the grid.

 `gap_tol <= 0` or `max_iters == 0` selects the default. On
 [`OpmStatus::MaxIters`] the best iterate is still stored in `out`.

 # Safety
 `grid` must point to `m` nodes and `out` be valid for writes.
 */
enum OpmStatus opm_solve(const struct OpmComplex *grid,
                         size_t m,
                         struct OpmComplex z0,
                         size_t n,
                         double gap_tol,
                         size_t max_iters,
                         struct OpmSolutionHandle **out);

/*
 # Safety
 `sol` must be a live handle and `info` valid for writes.
 */
enum OpmStatus opm_solution_info(const struct OpmSolutionHandle *sol, struct OpmSolutionInfo *info);

/*
 Copies the solution measure into a new measure handle.

 # Safety
 `sol` must be a live handle and `out` valid for writes.
 */
enum OpmStatus opm_solution_measure(const struct OpmSolutionHandle *sol, struct OpmMeasure **out);

/*
 # Safety
 `sol` must come from [`opm_solve`] and not be used afterwards.
 */
void opm_solution_free(struct OpmSolutionHandle *sol);

/*
 Szego function `D(f, z)` and `lambda_inf = (1 - |z|^2) |D|^2` for a density
 sampled at `len` equispaced angles, taken with respect to `dtheta / 2pi`.

 # Safety
 `values` must point to `len` values; the outputs must be valid for writes or null.
 */
enum OpmStatus opm_szego(const double *values,
                         size_t len,
                         struct OpmComplex z,
                         struct OpmComplex *szego,
                         double *lambda_inf);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPMLAB_H */
