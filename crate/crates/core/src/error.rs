use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("state has {found} rings but the mode grid has {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("step size underflow at t = {t} (h = {step})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("non-finite value in state at t = {t}")]
    NonFinite { t: f64 },

    #[error("integration exceeded {steps} steps before reaching t = {t_end}")]
    StepLimit { steps: usize, t_end: f64 },

    #[error("steady state did not converge: {reason} (residual {residual:e})")]
    NoSteadyState { reason: String, residual: f64 },

    #[error("{quantity} is undefined: {reason}")]
    Undefined { quantity: &'static str, reason: String },

    #[error("perturbative reduction invalid: {0}")]
    Reduction(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn undefined(quantity: &'static str, reason: impl Into<String>) -> Self {
        Error::Undefined {
            quantity,
            reason: reason.into(),
        }
    }
}
