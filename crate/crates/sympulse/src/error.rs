//! Error type shared across the crate.

use nalgebra::DVector;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("theta must lie in [0, 1], got {0}")]
    ThetaOutOfRange(f64),

    #[error("matrix is not skew-symmetric (defect {defect:.3e})")]
    NotSkewSymmetric { defect: f64 },

    #[error("singular jacobian in {context} (pivot {pivot:.3e}, threshold {threshold:.3e})")]
    SingularJacobian {
        context: &'static str,
        pivot: f64,
        threshold: f64,
    },

    #[error("singular matrix in {0}")]
    SingularMatrix(&'static str),

    #[error("newton did not converge after {iterations} iterations (residual {residual_norm:.3e})")]
    MaxIterExceeded {
        iterations: usize,
        residual_norm: f64,
        /// Best iterate seen before giving up.
        best: Box<DVector<f64>>,
    },

    #[error("velocity hessian is singular; the lagrangian is not hyperregular near the anchor")]
    NotHyperregular,

    #[error("composition substep {substep} failed: {source}")]
    SubstepFailed {
        substep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("composition fractions must sum to 1, got {0}")]
    InvalidComposition(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
