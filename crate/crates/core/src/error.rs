use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid sparse row {row}: {reason}")]
    InvalidSparseRow { row: usize, reason: String },

    #[error("labels must be -1 or +1 for binary classification (found {value} at row {row})")]
    InvalidLabel { row: usize, value: f64 },

    #[error("invalid monotone link: {0}")]
    InvalidLink(String),

    #[error("LPAV residual {residual:e} exceeds tolerance {tol:e}")]
    LpavNotConverged { residual: f64, tol: f64 },

    #[error("invalid group partition: {0}")]
    InvalidGroups(String),

    #[error("invalid Laplacian: {0}")]
    InvalidLaplacian(String),

    #[error("iterate became non-finite at iteration {iteration} (step size too large?)")]
    Diverged { iteration: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
