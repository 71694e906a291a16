//! Riemannian online gradient descent.
//!
//! One round of the online protocol: the learner commits to `x_t`, the
//! environment reveals the loss `f_t`, and the learner takes a projected
//! exponential-map step against the gradient,
//!
//! ```text
//! x_{t+1} = P_X( Exp_{x_t}( -η_t · grad f_t(x_t) ) ).
//! ```
//!
//! The update never evaluates a loss at a point chosen after its own round,
//! so the recorded trajectory is a faithful online run, usable for regret
//! accounting against any fixed comparator.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::losses::{loss_grad, LossTerm};
use crate::manifold::{FeasibleSet, HadamardManifold};
use crate::spd::{SpdManifold, SpdPoint};

/// Step-size schedule `t ↦ η_t` for round indices `t ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `η_t = η`.
    Constant(f64),
    /// `η_t = η₀ / √t`.
    InverseSqrt(f64),
    /// `η_t = η₀ / (μ t)`; with `η₀ = 1` this is the classical schedule
    /// for μ-strongly convex objectives.
    Inverse { eta0: f64, mu: f64 },
}

impl StepSchedule {
    /// Fixed step size; `eta` must be positive and finite.
    pub fn constant(eta: f64) -> Result<Self> {
        check_positive("eta", eta)?;
        Ok(StepSchedule::Constant(eta))
    }

    /// `η₀/√t` schedule; `eta0` must be positive and finite.
    pub fn inverse_sqrt(eta0: f64) -> Result<Self> {
        check_positive("eta0", eta0)?;
        Ok(StepSchedule::InverseSqrt(eta0))
    }

    /// `η₀/(μt)` schedule; both parameters must be positive and finite.
    pub fn inverse(eta0: f64, mu: f64) -> Result<Self> {
        check_positive("eta0", eta0)?;
        check_positive("mu", mu)?;
        Ok(StepSchedule::Inverse { eta0, mu })
    }

    /// Re-validate parameters (directly constructed variants may bypass the
    /// checked constructors).
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Constant(eta) => check_positive("eta", eta),
            StepSchedule::InverseSqrt(eta0) => check_positive("eta0", eta0),
            StepSchedule::Inverse { eta0, mu } => {
                check_positive("eta0", eta0)?;
                check_positive("mu", mu)
            }
        }
    }

    /// Step size for round `t ≥ 1`.
    pub fn step_size(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(Error::ParamOutOfRange {
                name: "t",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        self.validate()?;
        let tf = t as f64;
        Ok(match *self {
            StepSchedule::Constant(eta) => eta,
            StepSchedule::InverseSqrt(eta0) => eta0 / tf.sqrt(),
            StepSchedule::Inverse { eta0, mu } => eta0 / (mu * tf),
        })
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange {
            name,
            value,
            range: "(0, inf)",
        })
    }
}

/// Full record of one online run.
///
/// `iterates` holds `x_1, …, x_{T+1}` (one more entry than rounds played);
/// the remaining lists are indexed by round, `t = 1…T`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Visited points `x_1 … x_{T+1}`.
    pub iterates: Vec<SpdPoint>,
    /// Observed gradient norms `‖g_t‖`, one per round.
    pub grad_norms: Vec<f64>,
    /// Step sizes `η_t` actually used, one per round.
    pub step_sizes: Vec<f64>,
    /// Wall-clock seconds spent per round.
    pub step_times: Vec<f64>,
    /// Human-readable notes about analysis preconditions violated during
    /// the run (the run itself is never altered).
    pub warnings: Vec<String>,
}

impl Trajectory {
    /// Number of rounds played.
    pub fn horizon(&self) -> usize {
        self.grad_norms.len()
    }

    /// Final point `x_{T+1}`.
    pub fn final_point(&self) -> &SpdPoint {
        self.iterates.last().expect("trajectory holds x_1 at least")
    }
}

/// An online run aborted by a numerical failure, tagged with the round.
#[derive(Debug, Clone, thiserror::Error)]
#[error("online update failed at round {round}: {source}")]
pub struct RogdError {
    /// 1-based round index; 0 marks input validation before any round.
    pub round: usize,
    #[source]
    pub source: Error,
}

/// One projected gradient step: `P_X(Exp_x(-η g))`.
pub fn rogd_step<M: HadamardManifold>(
    m: &M,
    x: &M::Point,
    g: &M::Tangent,
    eta: f64,
    set: &FeasibleSet<M>,
) -> Result<M::Point> {
    check_positive("eta", eta)?;
    let x_tilde = m.exp(x, &m.scale_tangent(g, -eta))?;
    set.project(m, &x_tilde)
}

/// Play the full online protocol over `losses`, starting at `initial`.
///
/// Errors at round 0 indicate invalid inputs (empty stream, bad schedule,
/// infeasible start); later rounds tag the first numerical failure. When
/// the schedule is [`StepSchedule::Inverse`], rounds with `η_t > 1/μ`
/// (i.e. `t < η₀`) get a warning recorded, since the strongly-convex
/// analysis requires `η_t ≤ 1/μ`; the step itself is not clamped.
pub fn run_rogd(
    m: &SpdManifold,
    initial: &SpdPoint,
    losses: &[LossTerm],
    schedule: &StepSchedule,
    set: &FeasibleSet<SpdManifold>,
) -> std::result::Result<Trajectory, RogdError> {
    let fail = |round: usize, source: Error| RogdError { round, source };
    if losses.is_empty() {
        return Err(fail(0, Error::InvalidArgument("loss stream must be nonempty")));
    }
    schedule.validate().map_err(|e| fail(0, e))?;
    if !set.contains(m, initial, 1e-9).map_err(|e| fail(0, e))? {
        return Err(fail(
            0,
            Error::InvalidArgument("initial point lies outside the feasible set"),
        ));
    }

    let rounds = losses.len();
    let mut iterates = Vec::with_capacity(rounds + 1);
    let mut grad_norms = Vec::with_capacity(rounds);
    let mut step_sizes = Vec::with_capacity(rounds);
    let mut step_times = Vec::with_capacity(rounds);
    let mut warnings = Vec::new();

    let mut current = initial.clone();
    iterates.push(current.clone());
    for (idx, term) in losses.iter().enumerate() {
        let t = idx + 1;
        let started = Instant::now();
        let g = loss_grad(term, &current).map_err(|e| fail(t, e))?;
        let gn = g.norm().map_err(|e| fail(t, e))?;
        let eta = schedule.step_size(t).map_err(|e| fail(t, e))?;
        if let StepSchedule::Inverse { mu, .. } = schedule {
            if eta * mu > 1.0 + 1e-12 {
                warnings.push(format!(
                    "round {t}: step size {eta:.6e} exceeds 1/mu = {:.6e}; \
                     the strongly-convex step-size condition does not hold here",
                    1.0 / mu
                ));
            }
        }
        let next = rogd_step(m, &current, &g, eta, set).map_err(|e| fail(t, e))?;
        iterates.push(next.clone());
        grad_norms.push(gn);
        step_sizes.push(eta);
        step_times.push(started.elapsed().as_secs_f64());
        current = next;
    }

    Ok(Trajectory {
        iterates,
        grad_norms,
        step_sizes,
        step_times,
        warnings,
    })
}
