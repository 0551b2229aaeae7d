use thiserror::Error;

/// Errors raised by the estimators and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhdError {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient data: n = {n} but at least p + 2 = {required} observations are needed")]
    InsufficientData { n: usize, required: usize },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("observation {index} sits at the leverage singularity (denominator {denominator:e})")]
    DegenerateLeverage { index: usize, denominator: f64 },

    #[error("rank k = {k} is invalid for dimension p = {p}")]
    InvalidRank { k: usize, p: usize },

    #[error("contamination weight {0} is outside (0, 1)")]
    InvalidEpsilon(f64),

    #[error("perturbed eigenvector for direction {direction} matches two candidates equally well")]
    AmbiguousMatch { direction: usize },

    #[error("eigenvalues {first} and {second} of the model coincide")]
    DegenerateSpectrum { first: usize, second: usize },

    #[error("estimated eigenvalue for direction {direction} is numerically zero")]
    DegenerateEigenvalue { direction: usize },

    #[error("invalid population model: {0}")]
    InvalidModel(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("direction index {k} is out of range for a rank-{max} subspace")]
    InvalidDirection { k: usize, max: usize },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

impl PhdError {
    pub fn class(&self) -> ErrorClass {
        use PhdError::*;
        match self {
            InvalidRank { .. } | InvalidEpsilon(_) | InvalidDirection { .. } | UnsupportedModel(_) => {
                ErrorClass::Usage
            }
            InvalidVector(_) | DimensionMismatch(_) | InsufficientData { .. } | InvalidData(_)
            | InvalidModel(_) => ErrorClass::Data,
            InvalidMatrix(_)
            | NotPositiveDefinite { .. }
            | DegenerateLeverage { .. }
            | AmbiguousMatch { .. }
            | DegenerateSpectrum { .. }
            | DegenerateEigenvalue { .. }
            | UndefinedCorrelation(_) => ErrorClass::Numeric,
        }
    }

    /// Stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        use PhdError::*;
        match self {
            InvalidMatrix(_) => "InvalidMatrix",
            NotPositiveDefinite { .. } => "NotPositiveDefinite",
            InvalidVector(_) => "InvalidVector",
            DimensionMismatch(_) => "DimensionMismatch",
            InsufficientData { .. } => "InsufficientData",
            InvalidData(_) => "InvalidData",
            DegenerateLeverage { .. } => "DegenerateLeverage",
            InvalidRank { .. } => "InvalidRank",
            InvalidEpsilon(_) => "InvalidEpsilon",
            AmbiguousMatch { .. } => "AmbiguousMatch",
            DegenerateSpectrum { .. } => "DegenerateSpectrum",
            DegenerateEigenvalue { .. } => "DegenerateEigenvalue",
            InvalidModel(_) => "InvalidModel",
            UnsupportedModel(_) => "UnsupportedModel",
            UndefinedCorrelation(_) => "UndefinedCorrelation",
            InvalidDirection { .. } => "InvalidDirection",
        }
    }
}

pub type Result<T> = std::result::Result<T, PhdError>;
