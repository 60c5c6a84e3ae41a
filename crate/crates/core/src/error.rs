//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported colorspace: {0}")]
    UnsupportedColorspace(String),
    #[error("no frames in stream")]
    NoFrames,
    #[error("truncated frame: {0}")]
    TruncatedFrame(String),
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("sample out of 10-bit range: {0}")]
    SampleOutOfRange(u32),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("plane too small: {0}")]
    PlaneTooSmall(String),
    #[error("negative banding index: {0}")]
    NegativeBandingIndex(f64),
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),
    #[error("no statistically significant pairs")]
    NoSignificantPairs,
    #[error("invalid score matrix: {0}")]
    InvalidScoreMatrix(String),
    #[error("misaligned inputs: {0}")]
    MisalignedInputs(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("unknown metric: {0}")]
    UnknownMetric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
