use thiserror::Error;

use crate::geometry::Vector;

/// Errors raised by the library.
#[derive(Debug, Clone, Error)]
pub enum ViError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cyclic projection did not converge after {sweeps} sweeps (last change {change:e})")]
    ProjectionNotConverged {
        sweeps: usize,
        change: f64,
        best: Vector,
    },

    #[error("operator `{operator}` produced a non-finite value: {detail}")]
    Evaluation { operator: String, detail: String },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("unknown problem `{name}`; available: {}", available.join(", "))]
    UnknownProblem { name: String, available: Vec<String> },

    #[error("unknown method `{name}`; available: {}", available.join(", "))]
    UnknownMethod { name: String, available: Vec<String> },

    #[error("Armijo backtracking exceeded {m_max} reductions (last trial step {last_lambda:e})")]
    BacktrackFailure {
        m_max: u32,
        last_lambda: f64,
        last_trial: Vector,
    },

    #[error("parameter validation failed: {0}")]
    Validation(String),

    #[error("grid has {points} points, above the cap of {cap}")]
    GridTooLarge { points: u128, cap: u64 },
}

pub type Result<T> = std::result::Result<T, ViError>;
