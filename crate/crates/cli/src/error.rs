use phdsens::{ErrorClass, PhdError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("column '{0}' not found")]
    MissingColumn(String),

    #[error("non-numeric value '{value}' at row {row}, column '{col}'")]
    NonNumericCell { row: usize, col: String, value: String },

    #[error("{n} usable rows; at least {required} needed")]
    TooFewRows { n: usize, required: usize },

    #[error("malformed input: {0}")]
    Input(String),

    #[error("{0}")]
    Phd(#[from] PhdError),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// One-line machine-readable error record written to standard error.
#[derive(Debug, Serialize)]
pub struct ErrorRecord<'a> {
    pub error: &'a str,
    pub class: &'a str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    fn class(&self) -> ErrorClass {
        match self {
            CliError::Usage(_) => ErrorClass::Usage,
            CliError::Phd(e) => e.class(),
            _ => ErrorClass::Data,
        }
    }

    /// 2 usage, 3 data, 4 numeric degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Usage => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::MissingColumn(_) => "MissingColumn",
            CliError::NonNumericCell { .. } => "NonNumericCell",
            CliError::TooFewRows { .. } => "TooFewRows",
            CliError::Input(_) => "Input",
            CliError::Phd(e) => e.kind(),
            CliError::Io { .. } => "Io",
        }
    }

    pub fn to_json_line(&self) -> String {
        let class = match self.class() {
            ErrorClass::Usage => "usage",
            ErrorClass::Data => "data",
            ErrorClass::Numeric => "numeric",
        };
        let rec = ErrorRecord { error: self.kind(), class, message: self.to_string(), exit_code: self.exit_code() };
        serde_json::to_string(&rec).expect("error record serializes")
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
