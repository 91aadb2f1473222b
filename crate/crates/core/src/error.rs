use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("basis vectors are not orthonormal")]
    NotOrthonormal,

    #[error("isometry columns are not orthonormal")]
    NotIsometric,

    #[error("subsystem index {index} out of range for {count} subsystems")]
    NoSuchSubsystem { index: usize, count: usize },

    #[error("parameter `{name}` = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, lo, hi })
    }
}
