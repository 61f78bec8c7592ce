use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Lévy measure is not symmetric: {0}")]
    Asymmetric(String),

    #[error("measure not normalized: total mass {total}")]
    NotNormalized { total: f64 },

    #[error("quadrature did not converge (estimate {value}, residual {residual:e})")]
    Quadrature { value: f64, residual: f64 },

    #[error("delay integral diverges on component {component}: {reason}")]
    DivergentIntegral { component: usize, reason: String },

    #[error("inconsistent history junction: {0}")]
    Consistency(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("solution blew up at t = {time} (|x| = {magnitude:e})")]
    BlowUp { time: f64, magnitude: f64 },
}
