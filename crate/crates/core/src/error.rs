use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("level {level} out of range for a subsystem of dimension {dim}")]
    LevelOutOfRange { level: usize, dim: usize },
    #[error("unknown subsystem {0}")]
    UnknownSubsystem(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("sector violation: {0}")]
    SectorViolation(String),
    #[error("dense operation refused: dimension {dim} exceeds the limit of {limit}")]
    DimensionGuard { dim: usize, limit: usize },
    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("invalid time error: {0}")]
    InvalidTimeError(String),
    #[error("step size underflow at t = {t:.6e} s in segment '{segment}'")]
    StepUnderflow { t: f64, segment: String },
    #[error("trace drift {drift:.3e} exceeds the limit in segment '{segment}'")]
    TraceDrift { drift: f64, segment: String },
    #[error("non-finite value encountered in segment '{0}'")]
    NonFinite(String),
    #[error("serialization failed: {0}")]
    Serialization(String),
    #[error("I/O failed: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
