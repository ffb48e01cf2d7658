use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    /// Row and column are 1-based file coordinates; the header is row 1.
    #[error("parse error at row {row}, column {column}: {message}")]
    ParseError {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("missing value at row {row}, column {column}")]
    MissingValue { row: usize, column: usize },
    #[error("duplicate asset label '{0}'")]
    DuplicateAssetLabel(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] regfolio::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "Io",
            CliError::ParseError { .. } => "ParseError",
            CliError::MissingValue { .. } => "MissingValue",
            CliError::DuplicateAssetLabel(_) => "DuplicateAssetLabel",
            CliError::Config(_) => "Config",
            CliError::Core(e) => core_kind(e),
        }
    }

    /// Machine-readable record written on fatal failure.
    pub fn record(&self) -> ErrorRecord {
        let (row, column) = match self {
            CliError::ParseError { row, column, .. } | CliError::MissingValue { row, column } => {
                (Some(*row), Some(*column))
            }
            _ => (None, None),
        };
        ErrorRecord {
            error: self.kind(),
            message: self.to_string(),
            row,
            column,
        }
    }
}

fn core_kind(e: &regfolio::Error) -> &'static str {
    use regfolio::Error::*;
    match e {
        InvalidInput(_) => "InvalidInput",
        DimensionMismatch { .. } => "DimensionMismatch",
        DegenerateNormalization(_) => "DegenerateNormalization",
        DegenerateMoments { .. } => "DegenerateMoments",
        RankDeficient { .. } => "RankDeficient",
        NonConvergence { .. } => "NonConvergence",
        SingularPopulation => "SingularPopulation",
        ZeroRiskPortfolio => "ZeroRiskPortfolio",
        InsufficientSamples(_) => "InsufficientSamples",
        InvalidFoldCount { .. } => "InvalidFoldCount",
        AllInfeasible => "AllInfeasible",
        DegenerateSeries(_) => "DegenerateSeries",
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

pub type Result<T> = std::result::Result<T, CliError>;
