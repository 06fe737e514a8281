use thiserror::Error;

/// Errors raised by the core numerics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum VmlError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("grid mismatch: fields live on different velocity grids")]
    GridMismatch,
    #[error("kernel evaluated at its singular point xi = 0")]
    SingularPoint,
    #[error("resource guard: {what} needs {needed} units, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: u64,
        budget: u64,
    },
    #[error("linear solve failed after {iterations} iterations (relative residual {residual:.3e})")]
    LinearSolve { iterations: usize, residual: f64 },
    #[error("need at least {needed} frames, got {got}")]
    TooFewFrames { needed: usize, got: usize },
    #[error("velocity derivative order {order} exceeds the supported budget of {max}")]
    DerivativeBudget { order: usize, max: usize },
    #[error("initial data violates the charge-neutrality required at k = 0")]
    NonNeutralZeroMode,
}

pub type Result<T> = std::result::Result<T, VmlError>;
