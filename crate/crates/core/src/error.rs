use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("quadrature order {order} in dimension {dim} is below the required {required}")]
    InsufficientOrder { dim: usize, order: usize, required: usize },

    #[error("tensor grid of {points} points exceeds the budget of {budget}")]
    GridTooLarge { points: usize, budget: usize },

    #[error("target {target} not bracketed by [{lo_value}, {hi_value}]")]
    NotBracketed { target: f64, lo_value: f64, hi_value: f64 },

    #[error("root finder did not converge in {0} iterations")]
    NoConvergence(usize),

    #[error("degenerate slice: normalization constant {0:e}")]
    DegenerateSlice(f64),

    #[error("diagonal derivative underflow: {0:e}")]
    DerivativeUnderflow(f64),

    #[error("non-positive density value {0:e}")]
    NonPositiveDensity(f64),

    #[error("dimension {dim} exceeds the limit {limit} for quadrature marginals")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("rate fit needs at least 3 usable records, got {0}")]
    TooFewPoints(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the failure is a configuration / argument problem rather than a
    /// numerical one. The CLI maps these to different exit codes.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidArgument(_)
                | Error::DimensionTooLarge { .. }
                | Error::GridTooLarge { .. }
                | Error::InsufficientOrder { .. }
        )
    }
}
