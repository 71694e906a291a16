//! Executable oracles for horospherical geometry.
//!
//! This module turns the geometric inequalities underpinning the regret
//! analysis into checkable certificates:
//!
//! * finite-horizon evaluation of (scaled) Busemann functions,
//! * h-convexity and μ-strong h-convexity certificates for loss terms,
//! * the Stewart inequality and the Hadamard-space law of cosines,
//! * the Busemann descent inequality relating one projected gradient step
//!   to the comparator's Busemann value.
//!
//! Every check returns a [`CertificateMargin`] with `margin = lhs - rhs`;
//! the certified inequality `lhs >= rhs` predicts a nonnegative margin, up
//! to the numerical tolerances documented per check.

use crate::error::{Error, Result};
use crate::losses::{loss_grad, loss_value, LossTerm};
use crate::manifold::HadamardManifold;
use crate::spd::{SpdManifold, SpdPoint};

/// Result of a finite-horizon Busemann evaluation.
///
/// Partial values `||v|| * (d(γ(t), x) - t)` are nonincreasing in `t` on a
/// Hadamard manifold, so `value` approaches the true Busemann value from
/// above and `value - tol` serves as a heuristic lower-bound estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusemannEval {
    /// Partial value at the final horizon.
    pub value: f64,
    /// Ray parameter `t` at which the doubling stopped.
    pub horizon_used: f64,
    /// Last doubling decrement, clamped to be nonnegative; at most the
    /// requested tolerance on successful return.
    pub convergence_gap: f64,
}

/// Outcome of an inequality certificate, echoing both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateMargin {
    /// `lhs - rhs`; nonnegative when the certified inequality holds.
    pub margin: f64,
    /// Left-hand side of the tested inequality.
    pub lhs: f64,
    /// Right-hand side of the tested inequality.
    pub rhs: f64,
}

impl CertificateMargin {
    fn new(lhs: f64, rhs: f64) -> Self {
        CertificateMargin {
            margin: lhs - rhs,
            lhs,
            rhs,
        }
    }
}

/// Scaled Busemann function of the ray leaving `p` in direction `-v`.
///
/// Computes `B_{p,v}(x) = ||v||_p * lim_{t→∞} (d(γ(t), x) - t)` along the
/// unit-speed ray `γ(t) = Exp_p(-t v/||v||_p)`; the prefactor realizes the
/// scaling identity `B_{p,cv} = c B_{p,v}`. The limit is approximated by
/// doubling the horizon from `t₀ = max(1, d(p, x))` until the decrement
/// between successive partial values drops below `tol`. Ray points are
/// never materialized (see [`HadamardManifold::ray_distance`]), so horizons
/// far beyond floating-point range on the underlying manifold are fine.
///
/// Errors with [`Error::ZeroDirection`] for `v = 0` and
/// [`Error::BusemannNoConvergence`] if the decrement has not fallen below
/// `tol` by horizon `2⁴⁰ t₀`.
pub fn busemann<M: HadamardManifold>(
    m: &M,
    p: &M::Point,
    v: &M::Tangent,
    x: &M::Point,
    tol: f64,
) -> Result<BusemannEval> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::ParamOutOfRange {
            name: "tol",
            value: tol,
            range: "(0, inf)",
        });
    }
    let speed = m.norm(p, v)?;
    if speed <= 0.0 {
        return Err(Error::ZeroDirection);
    }
    let t0 = m.dist(p, x)?.max(1.0);
    let cap = t0 * (1u64 << 40) as f64;
    let mut t = t0;
    let mut prev = speed * (m.ray_distance(p, v, t, x)? - t);
    loop {
        t *= 2.0;
        let cur = speed * (m.ray_distance(p, v, t, x)? - t);
        let gap = prev - cur;
        if gap < tol {
            return Ok(BusemannEval {
                value: cur,
                horizon_used: t,
                convergence_gap: gap.max(0.0),
            });
        }
        if t >= cap {
            return Err(Error::BusemannNoConvergence { horizon: t, gap });
        }
        prev = cur;
    }
}

/// Certificate for h-convexity of a loss at `y`, witnessed by its gradient:
/// `f(x) - f(y) >= B_{y, grad f(y)}(x)`.
///
/// The Busemann right-hand side is approximated from above, so the computed
/// margin understates the true one by at most roughly `tol`; callers should
/// accept margins down to `-(tol + ε)`.
pub fn check_h_convexity(
    term: &LossTerm,
    y: &SpdPoint,
    x: &SpdPoint,
    tol: f64,
) -> Result<CertificateMargin> {
    let m = SpdManifold::new(y.dim())?;
    let v = loss_grad(term, y)?;
    let b = busemann(&m, y, &v, x, tol)?;
    let lhs = loss_value(term, x)? - loss_value(term, y)?;
    Ok(CertificateMargin::new(lhs, b.value))
}

/// Certificate for μ-strong h-convexity of a loss at `y`:
/// `f(x) - f(y) >= -||v||²/(2μ) + (μ/2) d²(Exp_y(-v/μ), x)` with
/// `v = grad f(y)`. All quantities are closed-form; no horizon limit is
/// involved, so margins are accurate to floating-point roundoff.
pub fn check_strong_h_convexity(
    term: &LossTerm,
    mu: f64,
    y: &SpdPoint,
    x: &SpdPoint,
) -> Result<CertificateMargin> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::ParamOutOfRange {
            name: "mu",
            value: mu,
            range: "(0, inf)",
        });
    }
    let m = SpdManifold::new(y.dim())?;
    let v = loss_grad(term, y)?;
    let vn = v.norm()?;
    let pulled = m.exp(y, &v.scaled(-1.0 / mu))?;
    let d = m.dist(&pulled, x)?;
    let rhs = -vn * vn / (2.0 * mu) + 0.5 * mu * d * d;
    let lhs = loss_value(term, x)? - loss_value(term, y)?;
    Ok(CertificateMargin::new(lhs, rhs))
}

/// Stewart inequality for the cevian point `p = geodesic_point(b, c, s)`:
/// `|ab|²|pc| + |ac|²|pb| >= (|pa|² + |pb||pc|)|bc|`.
///
/// Holds with equality in flat (commuting) configurations; nonpositive
/// curvature only widens the gap. All six side lengths are measured with
/// `dist` rather than inferred from `s`, so the check also exercises the
/// constant-speed property of `geodesic_point`.
pub fn check_stewart<M: HadamardManifold>(
    m: &M,
    a: &M::Point,
    b: &M::Point,
    c: &M::Point,
    s: f64,
) -> Result<CertificateMargin> {
    let p = m.geodesic_point(b, c, s)?;
    let ab = m.dist(a, b)?;
    let ac = m.dist(a, c)?;
    let bc = m.dist(b, c)?;
    let pa = m.dist(&p, a)?;
    let pb = m.dist(&p, b)?;
    let pc = m.dist(&p, c)?;
    let lhs = ab * ab * pc + ac * ac * pb;
    let rhs = (pa * pa + pb * pc) * bc;
    Ok(CertificateMargin::new(lhs, rhs))
}

/// Law of cosines in a Hadamard space, at vertex `p`:
/// `|ab|² >= |pb|² + |pa|² - 2⟨Log_p b, Log_p a⟩_p`.
pub fn check_cosine_law<M: HadamardManifold>(
    m: &M,
    a: &M::Point,
    p: &M::Point,
    b: &M::Point,
) -> Result<CertificateMargin> {
    let ab = m.dist(a, b)?;
    let pa = m.dist(p, a)?;
    let pb = m.dist(p, b)?;
    let la = m.log(p, a)?;
    let lb = m.log(p, b)?;
    let lhs = ab * ab;
    let rhs = pb * pb + pa * pa - 2.0 * m.inner(p, &lb, &la)?;
    Ok(CertificateMargin::new(lhs, rhs))
}

/// Descent inequality for one unprojected step `x̃ = Exp_x(-w)`:
/// `(|x̃x|² + |yx|² - |yx̃|²)/2 >= -B_{x,w}(y)`.
///
/// This is the key step relating the per-round progress of a gradient step
/// to the Busemann lower bound at an arbitrary comparator `y`. Because the
/// Busemann value is approximated from above, `-B` is approximated from
/// below, so the computed margin *overstates* the true one by at most
/// roughly `tol`; a nonnegative true margin still predicts a computed
/// margin above `-tol`.
pub fn check_busemann_descent<M: HadamardManifold>(
    m: &M,
    x: &M::Point,
    w: &M::Tangent,
    y: &M::Point,
    tol: f64,
) -> Result<CertificateMargin> {
    let b = busemann(m, x, w, y, tol)?;
    let x_tilde = m.exp(x, &m.scale_tangent(w, -1.0))?;
    let dxx = m.dist(&x_tilde, x)?;
    let dyx = m.dist(y, x)?;
    let dyxt = m.dist(y, &x_tilde)?;
    let lhs = 0.5 * (dxx * dxx + dyx * dyx - dyxt * dyxt);
    Ok(CertificateMargin::new(lhs, -b.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::TangentVec;
    use crate::test_support::{random_spd, random_spd_near, random_tangent, rng};
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, DMatrix, DVector};
    use rand::Rng;

    const TOL: f64 = 1e-6;

    fn spd(n: usize) -> SpdManifold {
        SpdManifold::new(n).unwrap()
    }

    #[test]
    fn busemann_at_ray_base_is_zero() {
        let m = spd(3);
        let mut r = rng(101);
        let p = random_spd(3, &mut r, 0.8);
        let v = random_tangent(&p, &mut r, 1.0);
        let eval = busemann(&m, &p, &v, &p, TOL).unwrap();
        assert!(eval.value.abs() <= TOL, "value {} at ray base", eval.value);
        assert!(eval.convergence_gap <= TOL);
    }

    #[test]
    fn busemann_on_ray_point_is_minus_arc_length() {
        let m = spd(3);
        let mut r = rng(103);
        let p = random_spd(3, &mut r, 0.6);
        let v = random_tangent(&p, &mut r, 1.0);
        for s in [0.3, 1.7, 4.0] {
            let x = m.exp(&p, &v.scaled(-s)).unwrap();
            let eval = busemann(&m, &p, &v, &x, TOL).unwrap();
            assert!(
                (eval.value + s).abs() <= TOL,
                "on-ray value {} should be {}",
                eval.value,
                -s
            );
        }
    }

    #[test]
    fn busemann_flat_direction_hand_value() {
        // Commuting 2x2 family: p = I, ray direction exp(t diag(1,0)), so
        // for x = diag(e^1.3, 1) the limit is exactly -1.3 (Euclidean
        // geometry in log coordinates).
        let m = spd(2);
        let p = SpdPoint::identity(2);
        let v = TangentVec::new(p.clone(), dmatrix![-1.0, 0.0; 0.0, 0.0]).unwrap();
        let x = SpdPoint::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
            1.3_f64.exp(),
            1.0,
        ])))
        .unwrap();
        let eval = busemann(&m, &p, &v, &x, TOL).unwrap();
        assert!(
            (eval.value + 1.3).abs() <= TOL,
            "flat hand value {} should be -1.3",
            eval.value
        );
        // Doubling the direction vector doubles the scaled value.
        let v2 = v.scaled(2.0);
        let eval2 = busemann(&m, &p, &v2, &x, 2.0 * TOL).unwrap();
        assert!(
            (eval2.value + 2.6).abs() <= 2.0 * TOL + 1e-9,
            "scaled hand value {} should be -2.6",
            eval2.value
        );
    }

    #[test]
    fn busemann_commuting_family_matches_log_coordinate_formula() {
        // For diagonal p = I, diagonal direction and diagonal x, everything
        // commutes and the geometry is Euclidean in log coordinates:
        // B_{I,V}(x) = <V, log x>_F. Computed here independently of the
        // doubling loop.
        let m = spd(3);
        let p = SpdPoint::identity(3);
        let mut r = rng(107);
        for _ in 0..5 {
            let mut d = DVector::from_fn(3, |_, _| r.sample::<f64, _>(rand_distr::StandardNormal));
            d /= d.norm();
            let v = TangentVec::new(p.clone(), DMatrix::from_diagonal(&(-1.0 * &d))).unwrap();
            let logs = DVector::from_fn(3, |i, _| 0.8 * (i as f64 - 1.0) + 0.3);
            let x = SpdPoint::new(DMatrix::from_diagonal(&logs.map(f64::exp))).unwrap();
            let expected = -d.dot(&logs);
            let eval = busemann(&m, &p, &v, &x, TOL).unwrap();
            assert!(
                (eval.value - expected).abs() <= 2.0 * TOL,
                "commuting value {} vs formula {}",
                eval.value,
                expected
            );
        }
    }

    #[test]
    fn busemann_scaling_identity() {
        let m = spd(3);
        let mut r = rng(109);
        let p = random_spd(3, &mut r, 0.7);
        let v = random_tangent(&p, &mut r, 1.0);
        let x = random_spd(3, &mut r, 0.7);
        let base = busemann(&m, &p, &v, &x, TOL).unwrap().value;
        for c in [0.5, 2.0, 7.0] {
            let scaled = busemann(&m, &p, &v.scaled(c), &x, c * TOL).unwrap().value;
            assert!(
                (scaled - c * base).abs() <= 2.0 * c * TOL,
                "scaling by {c}: {scaled} vs {}",
                c * base
            );
        }
    }

    #[test]
    fn busemann_is_one_lipschitz_for_unit_directions() {
        let m = spd(3);
        let mut r = rng(113);
        for _ in 0..10 {
            let p = random_spd(3, &mut r, 0.6);
            let v = random_tangent(&p, &mut r, 1.0);
            let x = random_spd(3, &mut r, 0.6);
            let x2 = random_spd(3, &mut r, 0.6);
            let b1 = busemann(&m, &p, &v, &x, TOL).unwrap().value;
            let b2 = busemann(&m, &p, &v, &x2, TOL).unwrap().value;
            let d = m.dist(&x, &x2).unwrap();
            assert!(
                (b1 - b2).abs() <= d + 2.0 * TOL,
                "Lipschitz violated: |{b1} - {b2}| > {d}"
            );
        }
    }

    #[test]
    fn busemann_midpoint_convexity() {
        let m = spd(3);
        let mut r = rng(127);
        for _ in 0..10 {
            let p = random_spd(3, &mut r, 0.6);
            let v = random_tangent(&p, &mut r, 1.0);
            let x = random_spd(3, &mut r, 0.6);
            let x2 = random_spd(3, &mut r, 0.6);
            let mid = m.geodesic_point(&x, &x2, 0.5).unwrap();
            let bm = busemann(&m, &p, &v, &mid, TOL).unwrap().value;
            let b1 = busemann(&m, &p, &v, &x, TOL).unwrap().value;
            let b2 = busemann(&m, &p, &v, &x2, TOL).unwrap().value;
            assert!(
                bm <= 0.5 * (b1 + b2) + 3.0 * TOL,
                "midpoint convexity violated: {bm} > avg of {b1}, {b2}"
            );
        }
    }

    #[test]
    fn busemann_value_below_all_partials() {
        let m = spd(3);
        let mut r = rng(131);
        let p = random_spd(3, &mut r, 0.7);
        let v = random_tangent(&p, &mut r, 2.3);
        let x = random_spd(3, &mut r, 0.7);
        let speed = v.norm().unwrap();
        let eval = busemann(&m, &p, &v, &x, TOL).unwrap();
        for t in [1.0, 2.0, 4.0, 8.0] {
            let partial = speed * (m.ray_distance(&p, &v, t, &x).unwrap() - t);
            assert!(
                eval.value <= partial + 1e-9,
                "value {} above partial {} at t={}",
                eval.value,
                partial,
                t
            );
        }
    }

    #[test]
    fn busemann_rejects_bad_inputs() {
        let m = spd(2);
        let p = SpdPoint::identity(2);
        let x = SpdPoint::identity(2);
        let zero = TangentVec::zero(p.clone());
        assert!(matches!(
            busemann(&m, &p, &zero, &x, TOL),
            Err(Error::ZeroDirection)
        ));
        let v = TangentVec::new(p.clone(), dmatrix![1.0, 0.0; 0.0, -1.0]).unwrap();
        assert!(matches!(
            busemann(&m, &p, &v, &x, 0.0),
            Err(Error::ParamOutOfRange { .. })
        ));
        assert!(matches!(
            busemann(&m, &p, &v, &x, -1.0),
            Err(Error::ParamOutOfRange { .. })
        ));
    }

    /// A mock one-dimensional "manifold" whose ray distance decreases too
    /// slowly for the partials ever to settle: each doubling subtracts the
    /// same fixed decrement, so the horizon cap must trip.
    struct SlowlyDriftingLine;

    impl HadamardManifold for SlowlyDriftingLine {
        type Point = f64;
        type Tangent = f64;

        fn inner(&self, _x: &f64, u: &f64, v: &f64) -> Result<f64> {
            Ok(u * v)
        }
        fn exp(&self, x: &f64, u: &f64) -> Result<f64> {
            Ok(x + u)
        }
        fn log(&self, x: &f64, y: &f64) -> Result<f64> {
            Ok(y - x)
        }
        fn dist(&self, x: &f64, y: &f64) -> Result<f64> {
            Ok((x - y).abs())
        }
        fn geodesic_point(&self, x: &f64, y: &f64, t: f64) -> Result<f64> {
            Ok(x + (y - x) * t)
        }
        fn scale_tangent(&self, u: &f64, c: f64) -> f64 {
            u * c
        }
        fn ray_distance(&self, _p: &f64, _dir: &f64, t: f64, _x: &f64) -> Result<f64> {
            Ok(t - 1e-3 * t.log2())
        }
    }

    #[test]
    fn busemann_reports_non_convergence_at_horizon_cap() {
        let m = SlowlyDriftingLine;
        let err = busemann(&m, &0.0, &1.0, &0.5, 1e-6).unwrap_err();
        match err {
            Error::BusemannNoConvergence { horizon, gap } => {
                assert!(horizon >= (1u64 << 40) as f64);
                assert!(gap > 1e-6);
            }
            other => panic!("expected BusemannNoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn stewart_hand_triangle_in_flat_coordinates() {
        // Diagonal (commuting) points form a flat subspace isometric to the
        // plane of log coordinates. With a = (0,3), b = (0,0), c = (4,0)
        // (a 3-4-5 right triangle) and s = 1/2: p = (2,0), |pa|² = 13, and
        // both sides of the Stewart relation equal 68 — classical Stewart
        // is an equality in Euclidean geometry.
        let m = spd(2);
        let diag = |u: f64, v: f64| {
            SpdPoint::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
                u.exp(),
                v.exp(),
            ])))
            .unwrap()
        };
        let a = diag(0.0, 3.0);
        let b = diag(0.0, 0.0);
        let c = diag(4.0, 0.0);
        let cert = check_stewart(&m, &a, &b, &c, 0.5).unwrap();
        assert_relative_eq!(cert.lhs, 68.0, max_relative = 1e-12);
        assert_relative_eq!(cert.rhs, 68.0, max_relative = 1e-12);
        assert!(cert.margin.abs() <= 1e-9);
    }

    #[test]
    fn stewart_degenerate_cases_vanish() {
        let m = spd(3);
        let mut r = rng(137);
        let a = random_spd(3, &mut r, 0.8);
        let b = random_spd(3, &mut r, 0.8);
        // b = c: every length involving the segment vanishes.
        let cert = check_stewart(&m, &a, &b, &b, 0.3).unwrap();
        assert!(cert.margin.abs() <= 1e-10);
        // s = 0 puts p on b and the relation collapses identically.
        let c = random_spd(3, &mut r, 0.8);
        let cert = check_stewart(&m, &a, &b, &c, 0.0).unwrap();
        assert!(cert.margin.abs() <= 1e-9 * (1.0 + cert.lhs.abs()));
    }

    #[test]
    fn stewart_margins_nonnegative_on_random_triples() {
        let mut r = rng(139);
        for n in [2usize, 4] {
            let m = spd(n);
            for _ in 0..200 {
                let a = random_spd(n, &mut r, 1.0);
                let b = random_spd(n, &mut r, 1.0);
                let c = random_spd(n, &mut r, 1.0);
                let s: f64 = r.random_range(0.0..=1.0);
                let cert = check_stewart(&m, &a, &b, &c, s).unwrap();
                let scale = m
                    .dist(&a, &b)
                    .unwrap()
                    .max(m.dist(&a, &c).unwrap())
                    .max(m.dist(&b, &c).unwrap());
                assert!(
                    cert.margin >= -1e-9 * scale.powi(3).max(1.0),
                    "Stewart margin {} at n={n}",
                    cert.margin
                );
            }
        }
    }

    #[test]
    fn cosine_law_vertex_coincidence_and_flat_equality() {
        let m = spd(2);
        let mut r = rng(149);
        let p = random_spd(2, &mut r, 0.8);
        let b = random_spd(2, &mut r, 0.8);
        // a = p: both sides reduce to |pb|².
        let cert = check_cosine_law(&m, &p, &p, &b).unwrap();
        assert!(cert.margin.abs() <= 1e-10 * (1.0 + cert.lhs.abs()));
        // Commuting (diagonal) triple: flat geometry makes it an equality.
        let diag = |u: f64, v: f64| {
            SpdPoint::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
                u.exp(),
                v.exp(),
            ])))
            .unwrap()
        };
        let cert = check_cosine_law(&m, &diag(1.0, -0.5), &diag(0.2, 0.4), &diag(-0.7, 1.1)).unwrap();
        assert!(cert.margin.abs() <= 1e-9);
    }

    #[test]
    fn cosine_law_margins_nonnegative_on_random_triples() {
        let mut r = rng(151);
        for n in [2usize, 4] {
            let m = spd(n);
            for _ in 0..200 {
                let a = random_spd(n, &mut r, 1.0);
                let p = random_spd(n, &mut r, 1.0);
                let b = random_spd(n, &mut r, 1.0);
                let cert = check_cosine_law(&m, &a, &p, &b).unwrap();
                let scale = m.dist(&p, &a).unwrap().max(m.dist(&p, &b).unwrap());
                assert!(
                    cert.margin >= -1e-9 * (scale * scale).max(1.0),
                    "cosine margin {} at n={n}",
                    cert.margin
                );
            }
        }
    }

    #[test]
    fn busemann_descent_trivial_configurations() {
        let m = spd(3);
        let mut r = rng(157);
        let x = random_spd(3, &mut r, 0.7);
        let w = random_tangent(&x, &mut r, 0.9);
        // y = x: both sides vanish.
        let cert = check_busemann_descent(&m, &x, &w, &x, TOL).unwrap();
        assert!(cert.margin.abs() <= 2.0 * TOL);
        // y = x̃ (the stepped point): the Busemann value is exactly -|w|²,
        // balancing the squared-distance terms.
        let x_tilde = m.exp(&x, &w.scaled(-1.0)).unwrap();
        let cert = check_busemann_descent(&m, &x, &w, &x_tilde, TOL).unwrap();
        assert!(cert.margin.abs() <= 2.0 * TOL);
    }

    #[test]
    fn busemann_descent_margins_nonnegative_on_random_instances() {
        let m = spd(4);
        let mut r = rng(163);
        for _ in 0..25 {
            let x = random_spd(4, &mut r, 0.7);
            let w_norm = r.random_range(0.2..1.5);
            let w = random_tangent(&x, &mut r, w_norm);
            let y = random_spd(4, &mut r, 0.7);
            let cert = check_busemann_descent(&m, &x, &w, &y, TOL).unwrap();
            assert!(
                cert.margin >= -TOL,
                "descent margin {} below -tol",
                cert.margin
            );
        }
    }

    #[test]
    fn h_convexity_margin_vanishes_at_coincident_points() {
        let mut r = rng(167);
        let y = random_spd(3, &mut r, 0.8);
        let a = DVector::from_fn(3, |_, _| r.sample::<f64, _>(rand_distr::StandardNormal));
        let term = LossTerm::tyler(a).unwrap();
        let cert = check_h_convexity(&term, &y, &y, TOL).unwrap();
        assert!(cert.margin.abs() <= 2.0 * TOL);
    }

    #[test]
    fn tyler_losses_are_h_convex() {
        let mut r = rng(173);
        let tol = 1e-4;
        for n in [2usize, 3] {
            for _ in 0..30 {
                let y = random_spd(n, &mut r, 0.6);
                let gap = r.random_range(0.1..0.7);
                let x = random_spd_near(&y, &mut r, gap);
                let a = DVector::from_fn(n, |_, _| r.sample::<f64, _>(rand_distr::StandardNormal));
                if a.norm() < 1e-6 {
                    continue;
                }
                let term = LossTerm::tyler(a).unwrap();
                let cert = check_h_convexity(&term, &y, &x, tol).unwrap();
                assert!(
                    cert.margin >= -(tol + 1e-6),
                    "Tyler h-convexity margin {} at n={n}",
                    cert.margin
                );
            }
        }
    }

    #[test]
    fn frechet_losses_are_h_convex() {
        let mut r = rng(179);
        let tol = 1e-4;
        for _ in 0..20 {
            let y = random_spd(3, &mut r, 0.6);
            let gap = r.random_range(0.1..0.8);
            let x = random_spd_near(&y, &mut r, gap);
            let target = random_spd(3, &mut r, 0.6);
            let term = LossTerm::frechet(target);
            let cert = check_h_convexity(&term, &y, &x, tol).unwrap();
            assert!(
                cert.margin >= -(tol + 1e-6),
                "Fréchet h-convexity margin {}",
                cert.margin
            );
        }
    }

    #[test]
    fn frechet_losses_are_exactly_one_strongly_h_convex() {
        // With μ = 1 the pulled point Exp_y(-v) is the target itself and
        // the two sides agree identically; the margin is pure roundoff.
        let mut r = rng(181);
        for _ in 0..25 {
            let y = random_spd(4, &mut r, 0.8);
            let x = random_spd(4, &mut r, 0.8);
            let target = random_spd(4, &mut r, 0.8);
            let term = LossTerm::frechet(target);
            let cert = check_strong_h_convexity(&term, 1.0, &y, &x).unwrap();
            assert!(
                cert.margin.abs() <= 1e-8 * (1.0 + cert.lhs.abs()),
                "strong h-convexity margin {} should vanish",
                cert.margin
            );
        }
        // Zero-gradient corner: y at the target still satisfies the bound
        // with margin zero (the quadratic term reduces to (1/2)d²(y,x)).
        let y = random_spd(4, &mut r, 0.8);
        let x = random_spd(4, &mut r, 0.8);
        let term = LossTerm::frechet(y.clone());
        let cert = check_strong_h_convexity(&term, 1.0, &y, &x).unwrap();
        assert!(cert.margin.abs() <= 1e-9 * (1.0 + cert.lhs.abs()));
    }

    #[test]
    fn strong_h_convexity_fails_for_overstated_modulus() {
        // The squared-distance loss is exactly 1-strongly h-convex, so
        // claiming μ = 1.5 must produce a negative margin. Taking y at the
        // target makes this closed-form: margin = (1-μ)/2 · d²(y,x) < 0.
        let mut r = rng(191);
        let y = random_spd(3, &mut r, 0.8);
        let x = random_spd(3, &mut r, 0.8);
        let m = spd(3);
        let term = LossTerm::frechet(y.clone());
        let cert = check_strong_h_convexity(&term, 1.5, &y, &x).unwrap();
        let d = m.dist(&y, &x).unwrap();
        assert!(cert.margin < 0.0);
        assert_relative_eq!(cert.margin, -0.25 * d * d, max_relative = 1e-9);
    }

    #[test]
    fn strong_h_convexity_rejects_bad_modulus() {
        let y = SpdPoint::identity(2);
        let term = LossTerm::frechet(y.clone());
        for mu in [0.0, -1.0, f64::INFINITY] {
            assert!(matches!(
                check_strong_h_convexity(&term, mu, &y, &y),
                Err(Error::ParamOutOfRange { .. })
            ));
        }
    }
}
