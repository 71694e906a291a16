//! Online loss families on the SPD manifold.
//!
//! Two families are provided, one per experiment:
//!
//! * **Tyler losses** `f(X) = log(a^T X^-1 a)` for a nonzero sample vector
//!   `a` — the per-sample objective of Tyler's M-estimator of scatter. The
//!   Riemannian gradient is `-a a^T / (a^T X^-1 a)` and its norm is
//!   identically 1, so these losses are 1-Lipschitz along geodesics.
//! * **Fréchet losses** `f(X) = d^2(X, Y)/2` for a target SPD matrix `Y`,
//!   the per-sample objective of the Fréchet (Karcher) mean. The gradient
//!   is `-Log_X(Y)` with norm `d(X, Y)`, and the loss is 1-strongly
//!   horospherically convex.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::manifold::HadamardManifold;
use crate::spd::{SpdManifold, SpdPoint, TangentVec};

/// One round's loss: a handle evaluable at any point of matching dimension.
#[derive(Debug, Clone)]
pub enum LossTerm {
    /// `f(X) = log(a^T X^-1 a)`.
    Tyler { sample: DVector<f64> },
    /// `f(X) = d^2(X, Y) / 2`.
    Frechet { target: SpdPoint },
}

impl LossTerm {
    /// Tyler loss for sample `a`; must be finite and nonzero.
    pub fn tyler(sample: DVector<f64>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InvalidArgument("empty sample vector"));
        }
        if !sample.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "sample vector",
            });
        }
        if sample.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroDirection);
        }
        Ok(LossTerm::Tyler { sample })
    }

    /// Fréchet loss with target `Y` (already validated as SPD).
    pub fn frechet(target: SpdPoint) -> Self {
        LossTerm::Frechet { target }
    }

    /// Ambient dimension the loss expects.
    pub fn dim(&self) -> usize {
        match self {
            LossTerm::Tyler { sample } => sample.len(),
            LossTerm::Frechet { target } => target.dim(),
        }
    }

    fn check_dim(&self, x: &SpdPoint) -> Result<()> {
        if self.dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }
}

/// Evaluate the loss at `x`.
pub fn loss_value(term: &LossTerm, x: &SpdPoint) -> Result<f64> {
    term.check_dim(x)?;
    match term {
        LossTerm::Tyler { sample } => {
            let s = quadratic_form_inverse(x, sample)?;
            Ok(s.ln())
        }
        LossTerm::Frechet { target } => {
            let m = SpdManifold::new(x.dim())?;
            let d = m.dist(x, target)?;
            Ok(0.5 * d * d)
        }
    }
}

/// Riemannian gradient of the loss at `x` (a tangent vector at `x`).
pub fn loss_grad(term: &LossTerm, x: &SpdPoint) -> Result<TangentVec> {
    term.check_dim(x)?;
    match term {
        LossTerm::Tyler { sample } => {
            let s = quadratic_form_inverse(x, sample)?;
            let outer = sample * sample.transpose();
            TangentVec::new(x.clone(), outer * (-1.0 / s))
        }
        LossTerm::Frechet { target } => {
            let m = SpdManifold::new(x.dim())?;
            Ok(m.log(x, target)?.scaled(-1.0))
        }
    }
}

/// Riemannian norm of the gradient at `x`, computed from the gradient
/// itself via the metric (not from a closed form), so the identities
/// `||grad|| = 1` for Tyler losses and `||grad|| = d(X, Y)` for Fréchet
/// losses remain genuine cross-checks.
pub fn grad_norm(term: &LossTerm, x: &SpdPoint) -> Result<f64> {
    loss_grad(term, x)?.norm()
}

/// `a^T X^-1 a` via a Cholesky solve; strictly positive for SPD `X` and
/// nonzero `a`.
fn quadratic_form_inverse(x: &SpdPoint, a: &DVector<f64>) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(x.matrix().clone()).ok_or(Error::FactorizationFailed {
        context: "loss quadratic form",
    })?;
    let sol = chol.solve(a);
    Ok(a.dot(&sol))
}
