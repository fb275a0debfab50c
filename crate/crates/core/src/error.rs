use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidPmf(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("domain size mismatch: {left} vs {right}")]
    DomainMismatch { left: usize, right: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("sample oracle failed: {0}")]
    Oracle(String),
    #[error("enumeration of {sequences} sequences exceeds the limit of {limit}")]
    EnumerationLimit { sequences: u128, limit: u128 },
    #[error("truncation point {needed} exceeds the cap of {cap}")]
    TruncationCap { needed: usize, cap: usize },
    #[error("calibration infeasible: {0}")]
    Infeasible(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
