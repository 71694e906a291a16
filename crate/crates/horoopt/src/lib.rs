//! Online gradient descent on Hadamard manifolds, instantiated on the SPD
//! manifold with the affine-invariant metric.
//!
//! The crate is organized in layers:
//!
//! * [`manifold`] — the abstract Hadamard-manifold contract, feasible sets
//!   and metric projection;
//! * [`spd`] — SPD points, tangent vectors, spectral matrix functions and
//!   the affine-invariant primitives (exp, log, distance, geodesics);
//! * [`geometry`] — Busemann function evaluation along geodesic rays and
//!   certificate checks for horospherical convexity, strong horospherical
//!   convexity, the Stewart inequality, the cosine law and the Busemann
//!   descent inequality;
//! * [`losses`] — the two online loss families: log-quadratic scatter
//!   losses `log(a^T X^-1 a)` and squared-distance losses `d^2(X, Y)/2`;
//! * [`rogd`] — the projected Riemannian online gradient descent loop and
//!   its step-size schedules;
//! * [`oracle`] — offline comparators (projected gradient descent with
//!   backtracking, the Karcher mean iteration, the scatter fixed-point
//!   iteration) and regret accounting;
//! * [`harness`] — experiment configuration, reproducible data generation,
//!   CSV/SVG emission and the parallel grid runner behind the `horoopt`
//!   command-line binary.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod losses;
pub mod manifold;
pub mod oracle;
pub mod rogd;
pub mod spd;

#[cfg(test)]
pub(crate) mod test_support;

pub use error::{Error, Result};
pub use manifold::{FeasibleSet, HadamardManifold};
pub use spd::{SpdManifold, SpdPoint, TangentVec};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn public_surface_smoke() {
        let m = SpdManifold::new(3).unwrap();
        let x = SpdPoint::identity(3);
        let u = TangentVec::zero(x.clone());
        let y = m.exp(&x, &u).unwrap();
        assert_eq!(x, y);
        assert!(m.dist(&x, &y).unwrap() <= 1e-12);
    }
}
