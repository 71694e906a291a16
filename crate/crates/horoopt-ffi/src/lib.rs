//! C ABI for the SPD online-optimization library.
//!
//! Matrices cross the boundary as dense row-major `n × n` double buffers;
//! the caller owns every buffer it passes in or receives into. Online
//! runs return an opaque [`HoroTrajectory`] handle that must be released
//! with [`horo_trajectory_free`]. Every function reports a
//! [`HoroStatus`]; outputs are written only on `Ok`.
//!
//! The generated header lives at `include/horoopt.h` (see `build.rs`).
//!
//! # Safety
//!
//! Callers must uphold the usual C contract: pointers are either null
//! (diagnosed as [`HoroStatus::NullPointer`]) or valid for the documented
//! number of elements, and handles are not used after free. Within that
//! contract no call aborts: invalid numerical input is reported through
//! the status code.

use std::slice;

use nalgebra::{DMatrix, DVector};

use horoopt::error::Error;
use horoopt::losses::LossTerm;
use horoopt::manifold::{FeasibleSet, HadamardManifold};
use horoopt::rogd::{run_rogd, StepSchedule, Trajectory};
use horoopt::spd::{symmetrize, SpdManifold, SpdPoint, TangentVec};

/// Result code of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoroStatus {
    /// Success; outputs are valid.
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// A parameter was out of range or an input buffer malformed.
    InvalidArgument = 2,
    /// Buffer or matrix dimensions disagree.
    DimensionMismatch = 3,
    /// The input left the numerical domain (asymmetry, indefiniteness,
    /// non-finite entries, failed factorization).
    NumericalFailure = 4,
    /// An iterative procedure exhausted its budget.
    NoConvergence = 5,
}

fn status_of(e: &Error) -> HoroStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::NotSquare { .. } => HoroStatus::DimensionMismatch,
        Error::ParamOutOfRange { .. } | Error::ZeroDirection | Error::InvalidArgument(_) => {
            HoroStatus::InvalidArgument
        }
        Error::NonFinite { .. }
        | Error::NotSymmetric { .. }
        | Error::EigenvalueFloor { .. }
        | Error::FactorizationFailed { .. } => HoroStatus::NumericalFailure,
        Error::BusemannNoConvergence { .. } | Error::NoConvergence { .. } => {
            HoroStatus::NoConvergence
        }
    }
}

/// Step-size schedule selector for online runs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoroSchedule {
    /// `eta_t = eta`.
    Constant = 0,
    /// `eta_t = eta / sqrt(t)`.
    InverseSqrt = 1,
    /// `eta_t = eta / (mu * t)`.
    InverseTime = 2,
}

/// Opaque record of one completed online run.
pub struct HoroTrajectory {
    dim: usize,
    inner: Trajectory,
}

// -- buffer helpers -----------------------------------------------------

unsafe fn read_square(n: usize, ptr: *const f64) -> Result<DMatrix<f64>, HoroStatus> {
    if ptr.is_null() {
        return Err(HoroStatus::NullPointer);
    }
    if n == 0 {
        return Err(HoroStatus::InvalidArgument);
    }
    let len = n.checked_mul(n).ok_or(HoroStatus::InvalidArgument)?;
    let buf = slice::from_raw_parts(ptr, len);
    Ok(DMatrix::from_fn(n, n, |i, j| buf[i * n + j]))
}

unsafe fn read_spd(n: usize, ptr: *const f64) -> Result<SpdPoint, HoroStatus> {
    SpdPoint::new(read_square(n, ptr)?).map_err(|e| status_of(&e))
}

unsafe fn read_tangent(
    n: usize,
    ptr: *const f64,
    base: &SpdPoint,
) -> Result<TangentVec, HoroStatus> {
    // Row-major symmetric input may carry transfer roundoff; fold it.
    let mat = symmetrize(read_square(n, ptr)?);
    TangentVec::new(base.clone(), mat).map_err(|e| status_of(&e))
}

unsafe fn write_square(n: usize, mat: &DMatrix<f64>, out: *mut f64) -> HoroStatus {
    if out.is_null() {
        return HoroStatus::NullPointer;
    }
    let buf = slice::from_raw_parts_mut(out, n * n);
    for i in 0..n {
        for j in 0..n {
            buf[i * n + j] = mat[(i, j)];
        }
    }
    HoroStatus::Ok
}

unsafe fn write_scalar(value: f64, out: *mut f64) -> HoroStatus {
    if out.is_null() {
        return HoroStatus::NullPointer;
    }
    *out = value;
    HoroStatus::Ok
}

// -- geometry kernel ----------------------------------------------------

/// Geodesic distance between SPD matrices `x` and `y` (each `n*n`,
/// row-major) under the affine-invariant metric.
///
/// # Safety
/// `x` and `y` must point to `n*n` doubles; `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn horo_spd_dist(
    n: usize,
    x: *const f64,
    y: *const f64,
    out: *mut f64,
) -> HoroStatus {
    let (px, py) = match (read_spd(n, x), read_spd(n, y)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    let m = match SpdManifold::new(n) {
        Ok(m) => m,
        Err(e) => return status_of(&e),
    };
    match m.dist(&px, &py) {
        Ok(d) => write_scalar(d, out),
        Err(e) => status_of(&e),
    }
}

/// Exponential map: the point reached from `x` along tangent `u`
/// (symmetric, `n*n` row-major) after unit time. Writes `n*n` doubles.
///
/// # Safety
/// `x` and `u` must point to `n*n` doubles; `out` to `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn horo_spd_exp(
    n: usize,
    x: *const f64,
    u: *const f64,
    out: *mut f64,
) -> HoroStatus {
    let px = match read_spd(n, x) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let tu = match read_tangent(n, u, &px) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let m = match SpdManifold::new(n) {
        Ok(m) => m,
        Err(e) => return status_of(&e),
    };
    match m.exp(&px, &tu) {
        Ok(p) => write_square(n, p.matrix(), out),
        Err(e) => status_of(&e),
    }
}

/// Logarithmic map: the tangent at `x` pointing to `y`. Writes `n*n`
/// doubles (a symmetric matrix).
///
/// # Safety
/// `x` and `y` must point to `n*n` doubles; `out` to `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn horo_spd_log(
    n: usize,
    x: *const f64,
    y: *const f64,
    out: *mut f64,
) -> HoroStatus {
    let (px, py) = match (read_spd(n, x), read_spd(n, y)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    let m = match SpdManifold::new(n) {
        Ok(m) => m,
        Err(e) => return status_of(&e),
    };
    match m.log(&px, &py) {
        Ok(t) => write_square(n, t.matrix(), out),
        Err(e) => status_of(&e),
    }
}

/// Point at parameter `t` (in `[0,1]`) on the geodesic from `x` to `y`.
/// Writes `n*n` doubles.
///
/// # Safety
/// `x` and `y` must point to `n*n` doubles; `out` to `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn horo_spd_geodesic(
    n: usize,
    x: *const f64,
    y: *const f64,
    t: f64,
    out: *mut f64,
) -> HoroStatus {
    let (px, py) = match (read_spd(n, x), read_spd(n, y)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    let m = match SpdManifold::new(n) {
        Ok(m) => m,
        Err(e) => return status_of(&e),
    };
    match m.geodesic_point(&px, &py, t) {
        Ok(p) => write_square(n, p.matrix(), out),
        Err(e) => status_of(&e),
    }
}

/// Affine-invariant inner product of tangents `u` and `v` at `x`.
///
/// # Safety
/// `x`, `u`, `v` must point to `n*n` doubles; `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn horo_spd_inner(
    n: usize,
    x: *const f64,
    u: *const f64,
    v: *const f64,
    out: *mut f64,
) -> HoroStatus {
    let px = match read_spd(n, x) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let (tu, tv) = match (read_tangent(n, u, &px), read_tangent(n, v, &px)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    let m = match SpdManifold::new(n) {
        Ok(m) => m,
        Err(e) => return status_of(&e),
    };
    match m.inner(&px, &tu, &tv) {
        Ok(ip) => write_scalar(ip, out),
        Err(e) => status_of(&e),
    }
}

/// Scaled horofunction value `B_{p,v}(x)`: the normalized limit of
/// `d(ray(t), x) - t` along the geodesic ray from `p` in direction `-v`,
/// scaled by the norm of `v`. `tol` is the doubling-horizon stopping
/// tolerance (must be positive).
///
/// # Safety
/// `p`, `v`, `x` must point to `n*n` doubles; `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn horo_busemann(
    n: usize,
    p: *const f64,
    v: *const f64,
    x: *const f64,
    tol: f64,
    out: *mut f64,
) -> HoroStatus {
    let (pp, px) = match (read_spd(n, p), read_spd(n, x)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    let tv = match read_tangent(n, v, &pp) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let m = match SpdManifold::new(n) {
        Ok(m) => m,
        Err(e) => return status_of(&e),
    };
    match horoopt::geometry::busemann(&m, &pp, &tv, &px, tol) {
        Ok(eval) => write_scalar(eval.value, out),
        Err(e) => status_of(&e),
    }
}

// -- online runs --------------------------------------------------------

fn make_schedule(schedule: HoroSchedule, eta: f64, mu: f64) -> Result<StepSchedule, HoroStatus> {
    let made = match schedule {
        HoroSchedule::Constant => StepSchedule::constant(eta),
        HoroSchedule::InverseSqrt => StepSchedule::inverse_sqrt(eta),
        HoroSchedule::InverseTime => StepSchedule::inverse(eta, mu),
    };
    made.map_err(|e| status_of(&e))
}

/// Feasible set for a run: a geodesic ball of `radius` about the identity
/// when `radius` is positive and finite, otherwise the whole manifold.
fn make_set(n: usize, radius: f64) -> Result<FeasibleSet<SpdManifold>, HoroStatus> {
    if radius > 0.0 && radius.is_finite() {
        FeasibleSet::geodesic_ball(SpdPoint::identity(n), radius).map_err(|e| status_of(&e))
    } else {
        Ok(FeasibleSet::whole())
    }
}

unsafe fn run_and_box(
    n: usize,
    losses: Vec<LossTerm>,
    eta: f64,
    schedule: HoroSchedule,
    mu: f64,
    ball_radius: f64,
    out: *mut *mut HoroTrajectory,
) -> HoroStatus {
    if out.is_null() {
        return HoroStatus::NullPointer;
    }
    let sched = match make_schedule(schedule, eta, mu) {
        Ok(s) => s,
        Err(s) => return s,
    };
    let set = match make_set(n, ball_radius) {
        Ok(s) => s,
        Err(s) => return s,
    };
    let m = match SpdManifold::new(n) {
        Ok(m) => m,
        Err(e) => return status_of(&e),
    };
    let initial = match set.project(&m, &SpdPoint::identity(n)) {
        Ok(p) => p,
        Err(e) => return status_of(&e),
    };
    match run_rogd(&m, &initial, &losses, &sched, &set) {
        Ok(traj) => {
            *out = Box::into_raw(Box::new(HoroTrajectory { dim: n, inner: traj }));
            HoroStatus::Ok
        }
        Err(e) => status_of(&e.source),
    }
}

/// Online scatter estimation over `count` sample vectors (`count * n`
/// doubles, sample-major) with losses `log(a' inv(S) a)`, starting at the
/// identity. A positive finite `ball_radius` constrains the run to a
/// geodesic ball about the identity. On success `*out` owns the run
/// record; release it with [`horo_trajectory_free`].
///
/// # Safety
/// `samples` must point to `count * n` doubles; `out` to one pointer.
#[no_mangle]
pub unsafe extern "C" fn horo_run_tyler(
    n: usize,
    samples: *const f64,
    count: usize,
    eta: f64,
    schedule: HoroSchedule,
    mu: f64,
    ball_radius: f64,
    out: *mut *mut HoroTrajectory,
) -> HoroStatus {
    if samples.is_null() {
        return HoroStatus::NullPointer;
    }
    if n == 0 || count == 0 {
        return HoroStatus::InvalidArgument;
    }
    let len = match count.checked_mul(n) {
        Some(l) => l,
        None => return HoroStatus::InvalidArgument,
    };
    let buf = slice::from_raw_parts(samples, len);
    let mut losses = Vec::with_capacity(count);
    for t in 0..count {
        let a = DVector::from_fn(n, |i, _| buf[t * n + i]);
        match LossTerm::tyler(a) {
            Ok(term) => losses.push(term),
            Err(e) => return status_of(&e),
        }
    }
    run_and_box(n, losses, eta, schedule, mu, ball_radius, out)
}

/// Online geodesic mean estimation over `count` SPD targets
/// (`count * n * n` doubles, target-major row-major) with losses
/// `d(S, Y_t)^2 / 2`, starting at the identity. See [`horo_run_tyler`]
/// for the shared conventions.
///
/// # Safety
/// `targets` must point to `count * n * n` doubles; `out` to one pointer.
#[no_mangle]
pub unsafe extern "C" fn horo_run_frechet(
    n: usize,
    targets: *const f64,
    count: usize,
    eta: f64,
    schedule: HoroSchedule,
    mu: f64,
    ball_radius: f64,
    out: *mut *mut HoroTrajectory,
) -> HoroStatus {
    if targets.is_null() {
        return HoroStatus::NullPointer;
    }
    if n == 0 || count == 0 {
        return HoroStatus::InvalidArgument;
    }
    let stride = match n.checked_mul(n) {
        Some(s) => s,
        None => return HoroStatus::InvalidArgument,
    };
    if count.checked_mul(stride).is_none() {
        return HoroStatus::InvalidArgument;
    }
    let mut losses = Vec::with_capacity(count);
    for t in 0..count {
        match read_spd(n, targets.add(t * stride)) {
            Ok(point) => losses.push(LossTerm::frechet(point)),
            Err(s) => return s,
        }
    }
    run_and_box(n, losses, eta, schedule, mu, ball_radius, out)
}

// -- trajectory accessors -----------------------------------------------

/// Number of completed rounds recorded in the trajectory.
///
/// # Safety
/// `traj` must be a live handle; `out` must point to one usize.
#[no_mangle]
pub unsafe extern "C" fn horo_trajectory_len(
    traj: *const HoroTrajectory,
    out: *mut usize,
) -> HoroStatus {
    if traj.is_null() || out.is_null() {
        return HoroStatus::NullPointer;
    }
    let t = &*traj;
    *out = t.inner.horizon();
    HoroStatus::Ok
}

/// The point that played round `idx` (0-based), as `n*n` row-major
/// doubles. Valid indices run from 0 through the trajectory length
/// inclusive: the entry at the length is the post-run landing point.
///
/// # Safety
/// `traj` must be a live handle; `out` must point to `n*n` doubles for
/// the trajectory's dimension `n`.
#[no_mangle]
pub unsafe extern "C" fn horo_trajectory_iterate(
    traj: *const HoroTrajectory,
    idx: usize,
    out: *mut f64,
) -> HoroStatus {
    if traj.is_null() {
        return HoroStatus::NullPointer;
    }
    let t = &*traj;
    match t.inner.iterates.get(idx) {
        Some(p) => write_square(t.dim, p.matrix(), out),
        None => HoroStatus::InvalidArgument,
    }
}

/// Riemannian gradient norm observed at round `idx` (0-based).
///
/// # Safety
/// `traj` must be a live handle; `out` must point to one double.
#[no_mangle]
pub unsafe extern "C" fn horo_trajectory_grad_norm(
    traj: *const HoroTrajectory,
    idx: usize,
    out: *mut f64,
) -> HoroStatus {
    if traj.is_null() {
        return HoroStatus::NullPointer;
    }
    let t = &*traj;
    match t.inner.grad_norms.get(idx) {
        Some(&g) => write_scalar(g, out),
        None => HoroStatus::InvalidArgument,
    }
}

/// Step size played at round `idx` (0-based).
///
/// # Safety
/// `traj` must be a live handle; `out` must point to one double.
#[no_mangle]
pub unsafe extern "C" fn horo_trajectory_step_size(
    traj: *const HoroTrajectory,
    idx: usize,
    out: *mut f64,
) -> HoroStatus {
    if traj.is_null() {
        return HoroStatus::NullPointer;
    }
    let t = &*traj;
    match t.inner.step_sizes.get(idx) {
        Some(&s) => write_scalar(s, out),
        None => HoroStatus::InvalidArgument,
    }
}

/// Release a trajectory handle. Null is a no-op.
///
/// # Safety
/// `traj` must be a handle returned by a run function, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn horo_trajectory_free(traj: *mut HoroTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}
