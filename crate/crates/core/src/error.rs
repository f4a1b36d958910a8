use thiserror::Error;

/// Errors raised by the tomography library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid setting: {0}")]
    InvalidSetting(String),

    #[error("invalid outcome: {0}")]
    InvalidOutcome(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not selfadjoint (deviation {0:.3e})")]
    NotSelfadjoint(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("zero factor: state is undefined")]
    ZeroFactor,

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("dataset is incomplete: {missing} of {total} settings missing")]
    IncompleteDataset { missing: usize, total: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("log-likelihood is -inf: a cell with positive count has zero probability")]
    ZeroProbabilityCell,

    #[error("singular model: {0}")]
    SingularModel(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by malformed input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::ZeroProbabilityCell | Error::SingularModel(_) | Error::FitFailed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
