#ifndef HOROOPT_H
#define HOROOPT_H

/* Generated by cbindgen from horoopt-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every API call.
typedef enum HoroStatus {
  // Success; outputs are valid.
  HORO_STATUS_OK = 0,
  // A required pointer was null.
  HORO_STATUS_NULL_POINTER = 1,
  // A parameter was out of range or an input buffer malformed.
  HORO_STATUS_INVALID_ARGUMENT = 2,
  // Buffer or matrix dimensions disagree.
  HORO_STATUS_DIMENSION_MISMATCH = 3,
  // The input left the numerical domain (asymmetry, indefiniteness,
  // non-finite entries, failed factorization).
  HORO_STATUS_NUMERICAL_FAILURE = 4,
  // An iterative procedure exhausted its budget.
  HORO_STATUS_NO_CONVERGENCE = 5,
} HoroStatus;

// Step-size schedule selector for online runs.
typedef enum HoroSchedule {
  // `eta_t = eta`.
  HORO_SCHEDULE_CONSTANT = 0,
  // `eta_t = eta / sqrt(t)`.
  HORO_SCHEDULE_INVERSE_SQRT = 1,
  // `eta_t = eta / (mu * t)`.
  HORO_SCHEDULE_INVERSE_TIME = 2,
} HoroSchedule;

// Opaque record of one completed online run.
typedef struct HoroTrajectory HoroTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Geodesic distance between SPD matrices `x` and `y` (each `n*n`,
// row-major) under the affine-invariant metric.
//
// # Safety
// `x` and `y` must point to `n*n` doubles; `out` to one double.
enum HoroStatus horo_spd_dist(size_t n, const double *x, const double *y, double *out);

// Exponential map: the point reached from `x` along tangent `u`
// (symmetric, `n*n` row-major) after unit time. Writes `n*n` doubles.
//
// # Safety
// `x` and `u` must point to `n*n` doubles; `out` to `n*n` doubles.
enum HoroStatus horo_spd_exp(size_t n, const double *x, const double *u, double *out);

// Logarithmic map: the tangent at `x` pointing to `y`. Writes `n*n`
// doubles (a symmetric matrix).
//
// # Safety
// `x` and `y` must point to `n*n` doubles; `out` to `n*n` doubles.
enum HoroStatus horo_spd_log(size_t n, const double *x, const double *y, double *out);

// Point at parameter `t` (in `[0,1]`) on the geodesic from `x` to `y`.
// Writes `n*n` doubles.
//
// # Safety
// `x` and `y` must point to `n*n` doubles; `out` to `n*n` doubles.
enum HoroStatus horo_spd_geodesic(size_t n,
                                  const double *x,
                                  const double *y,
                                  double t,
                                  double *out);

// Affine-invariant inner product of tangents `u` and `v` at `x`.
//
// # Safety
// `x`, `u`, `v` must point to `n*n` doubles; `out` to one double.
enum HoroStatus horo_spd_inner(size_t n,
                               const double *x,
                               const double *u,
                               const double *v,
                               double *out);

// Scaled horofunction value `B_{p,v}(x)`: the normalized limit of
// `d(ray(t), x) - t` along the geodesic ray from `p` in direction `-v`,
// scaled by the norm of `v`. `tol` is the doubling-horizon stopping
// tolerance (must be positive).
//
// # Safety
// `p`, `v`, `x` must point to `n*n` doubles; `out` to one double.
enum HoroStatus horo_busemann(size_t n,
                              const double *p,
                              const double *v,
                              const double *x,
                              double tol,
                              double *out);

// Online scatter estimation over `count` sample vectors (`count * n`
// doubles, sample-major) with losses `log(a' inv(S) a)`, starting at the
// identity. A positive finite `ball_radius` constrains the run to a
// geodesic ball about the identity. On success `*out` owns the run
// record; release it with [`horo_trajectory_free`].
//
// # Safety
// `samples` must point to `count * n` doubles; `out` to one pointer.
enum HoroStatus horo_run_tyler(size_t n,
                               const double *samples,
                               size_t count,
                               double eta,
                               enum HoroSchedule schedule,
                               double mu,
                               double ball_radius,
                               struct HoroTrajectory **out);

// Online geodesic mean estimation over `count` SPD targets
// (`count * n * n` doubles, target-major row-major) with losses
// `d(S, Y_t)^2 / 2`, starting at the identity. See [`horo_run_tyler`]
// for the shared conventions.
//
// # Safety
// `targets` must point to `count * n * n` doubles; `out` to one pointer.
enum HoroStatus horo_run_frechet(size_t n,
                                 const double *targets,
                                 size_t count,
                                 double eta,
                                 enum HoroSchedule schedule,
                                 double mu,
                                 double ball_radius,
                                 struct HoroTrajectory **out);

// Number of completed rounds recorded in the trajectory.
//
// # Safety
// `traj` must be a live handle; `out` must point to one usize.
enum HoroStatus horo_trajectory_len(const struct HoroTrajectory *traj, size_t *out);

// The point that played round `idx` (0-based), as `n*n` row-major
// doubles. Valid indices run from 0 through the trajectory length
// inclusive: the entry at the length is the post-run landing point.
//
// # Safety
// `traj` must be a live handle; `out` must point to `n*n` doubles for
// the trajectory's dimension `n`.
enum HoroStatus horo_trajectory_iterate(const struct HoroTrajectory *traj, size_t idx, double *out);

// Riemannian gradient norm observed at round `idx` (0-based).
//
// # Safety
// `traj` must be a live handle; `out` must point to one double.
enum HoroStatus horo_trajectory_grad_norm(const struct HoroTrajectory *traj,
                                          size_t idx,
                                          double *out);

// Step size played at round `idx` (0-based).
//
// # Safety
// `traj` must be a live handle; `out` must point to one double.
enum HoroStatus horo_trajectory_step_size(const struct HoroTrajectory *traj,
                                          size_t idx,
                                          double *out);

// Release a trajectory handle. Null is a no-op.
//
// # Safety
// `traj` must be a handle returned by a run function, not yet freed.
void horo_trajectory_free(struct HoroTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOROOPT_H */
