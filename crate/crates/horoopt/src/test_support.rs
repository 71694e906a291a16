//! Deterministic random-instance generators shared by the unit tests.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::spd::{SpdPoint, TangentVec};

/// Fixed-seed generator so every test run sees identical instances.
pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Random symmetric matrix with independent N(0, scale^2) entries on and
/// above the diagonal, mirrored below.
pub fn random_sym(n: usize, r: &mut ChaCha12Rng, scale: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z: f64 = r.sample(StandardNormal);
            m[(i, j)] = scale * z;
            m[(j, i)] = scale * z;
        }
    }
    m
}

/// Random SPD point as `exp(S)` of a random symmetric matrix; `spread`
/// controls how far the spectrum wanders from 1.
pub fn random_spd(n: usize, r: &mut ChaCha12Rng, spread: f64) -> SpdPoint {
    let s = random_sym(n, r, spread / (n as f64).sqrt());
    let e = crate::spd::matrix_fn(&s, crate::spd::MatrixFn::Exp).expect("exp of moderate matrix");
    SpdPoint::new(e).expect("exp of symmetric is SPD")
}

/// Random tangent vector at `base` rescaled to the requested Riemannian
/// norm.
pub fn random_tangent(base: &SpdPoint, r: &mut ChaCha12Rng, norm_target: f64) -> TangentVec {
    let n = base.dim();
    loop {
        let s = random_sym(n, r, 1.0);
        let v = TangentVec::new(base.clone(), s).expect("symmetric tangent");
        let nrm = v.norm().expect("tangent norm");
        if nrm > 1e-8 {
            return v.scaled(norm_target / nrm);
        }
    }
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal(n: usize, r: &mut ChaCha12Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| r.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Random invertible matrix with singular values log-spaced so the
/// condition number equals `cond`.
pub fn random_invertible(n: usize, r: &mut ChaCha12Rng, cond: f64) -> DMatrix<f64> {
    let q1 = random_orthogonal(n, r);
    let q2 = random_orthogonal(n, r);
    let log_cond = cond.ln();
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            (-0.5 * log_cond + frac * log_cond).exp()
        } else {
            0.0
        }
    });
    q1 * d * q2
}

/// Random SPD point centered at `base`: `Exp_base(V)` with `V` a random
/// tangent of the given norm.
pub fn random_spd_near(
    base: &SpdPoint,
    r: &mut ChaCha12Rng,
    dist: f64,
) -> SpdPoint {
    use crate::manifold::HadamardManifold;
    let m = crate::spd::SpdManifold::new(base.dim()).expect("dimension");
    let v = random_tangent(base, r, dist);
    m.exp(base, &v).expect("exp of moderate tangent")
}
