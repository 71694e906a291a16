//! Error types shared by the geometry kernel and the optimization layers.

use thiserror::Error;

/// Errors produced by manifold primitives, matrix functions, loss
/// evaluations and the certificate routines built on top of them.
///
/// The policy throughout the crate is to *report* numerically invalid
/// inputs or results instead of silently repairing them: a matrix whose
/// smallest eigenvalue sits at or below the relative positivity floor is
/// an error, never clamped.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Operands disagree in dimension (matrix sizes or vector lengths).
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A matrix argument is not square.
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    /// An entry is NaN or infinite, either in an input or in a computed
    /// result (e.g. overflow of the matrix exponential).
    #[error("non-finite entry encountered in {context}")]
    NonFinite { context: &'static str },

    /// A matrix that must be symmetric is not, beyond the relative
    /// symmetry tolerance.
    #[error("matrix is not symmetric: max |A - A^T| entry {max_asym:.3e} exceeds tolerance {tol:.3e}")]
    NotSymmetric { max_asym: f64, tol: f64 },

    /// An eigenvalue sits at or below the positivity floor required by
    /// the requested operation (definiteness of a point, real logarithm,
    /// inverse square root, fractional power).
    #[error("eigenvalue {eigenvalue:.6e} at or below positivity floor {floor:.6e}")]
    EigenvalueFloor { eigenvalue: f64, floor: f64 },

    /// A scalar parameter is outside its admissible range.
    #[error("parameter {name} = {value} outside admissible range {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// A direction vector that must be nonzero has zero norm.
    #[error("direction vector has zero norm")]
    ZeroDirection,

    /// The Busemann horizon-doubling loop exhausted its cap without the
    /// partial values settling below the requested tolerance.
    #[error("Busemann evaluation did not converge: horizon {horizon:.3e} reached with gap {gap:.3e}")]
    BusemannNoConvergence { horizon: f64, gap: f64 },

    /// A Cholesky or similar factorization failed on a matrix that
    /// passed validation; indicates conditioning at the edge of f64.
    #[error("numerical factorization failed in {context}")]
    FactorizationFailed { context: &'static str },

    /// An iterative solver exhausted its iteration budget; `residual` is
    /// the solver's own convergence measure at the last iterate, so the
    /// caller can judge how far off it stopped.
    #[error("iteration did not converge after {iters} iterations (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },

    /// Catch-all for violated preconditions that carry a message.
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

/// Convenience alias used by the geometry and loss modules.
pub type Result<T> = std::result::Result<T, Error>;
