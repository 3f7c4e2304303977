use thiserror::Error;

/// Errors raised by the scattering library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatterError {
    /// Evaluation point outside the region where a formula is defined
    /// (coincident kernel points, inside an exclusion ball, near zone).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid input parameters or geometry.
    #[error("validation error: {0}")]
    Validation(String),

    /// A singular surface integral could not be desingularized at the
    /// requested evaluation point.
    #[error("desingularization failure: {0}")]
    Desingularization(String),

    /// A matrix the theory needs to invert is singular or badly conditioned.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// A closed-form result is only defined under assumptions that do not hold.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Overlapping or coincident particles.
    #[error("assembly error: {0}")]
    Assembly(String),

    /// Iterative solver stopped before reaching the tolerance.
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    /// Direct factorization hit a singular matrix.
    #[error("singular system: {0}")]
    Singular(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl From<std::io::Error> for ScatterError {
    fn from(e: std::io::Error) -> Self {
        ScatterError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ScatterError>;
