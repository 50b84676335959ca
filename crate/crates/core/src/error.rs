use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),
    #[error("non-finite input {value} to {context}")]
    NonFinite { context: &'static str, value: f64 },
    #[error("weight groups do not match: {0}")]
    GroupMismatch(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("cumulative step size overflowed at step {0}")]
    ScheduleOverflow(u64),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite gradient at step {0}")]
    NonFiniteGradient(u64),
    #[error("divergence at step {step}: max |w*| = {norm}")]
    Diverged { step: u64, norm: f64 },
    #[error("csv line {line}, column {column}: {message}")]
    Csv { line: u64, column: usize, message: String },
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(context: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { context, value })
    }
}
