use thiserror::Error;

/// A study, catalog or population configuration that cannot be realized.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Violations(Vec<String>),
    #[error("insufficient {pool} pool: need {needed}, have {available}")]
    InsufficientPool { pool: &'static str, needed: usize, available: usize },
    #[error("{0}")]
    Invalid(String),
}

/// Malformed or inconsistent input data (CSV files, joined record sets).
#[derive(Debug, Error)]
pub enum DataError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("{0}")]
    Integrity(String),
}
