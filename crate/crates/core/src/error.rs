use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("kernel evaluated at coincident points")]
    CoincidentPoints,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid direction: {0}")]
    InvalidDirection(String),
    #[error("contrast is undefined for a non-positive material parameter")]
    InvalidContrast,
    #[error("far-field block does not match the incident wave")]
    TagMismatch,
    #[error("far-field data does not cover the direction set: {0}")]
    IncompleteCoverage(String),
    #[error("predictor requires a single-contrast configuration: {0}")]
    ModeMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid statistics request: {0}")]
    InvalidStatistics(String),
}

pub type Result<T> = std::result::Result<T, Error>;
