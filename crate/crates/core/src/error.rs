use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EsnError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is singular or not positive definite: {0}")]
    SingularMatrix(String),
    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("accuracy not reached: value {value:e}, error estimate {error_estimate:e} after {points_used} points")]
    AccuracyNotReached {
        value: f64,
        error_estimate: f64,
        points_used: u64,
    },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("parameters lie on a case boundary: {0}")]
    BoundaryCase(String),
    #[error("invalid lambda: {message} (triple i={i}, k={k}, j={j})")]
    InvalidLambda {
        i: usize,
        k: usize,
        j: usize,
        message: String,
    },
    #[error("constraint violation: {message} (residual {residual:e})")]
    ConstraintViolation { message: String, residual: f64 },
}

pub type Result<T> = std::result::Result<T, EsnError>;
