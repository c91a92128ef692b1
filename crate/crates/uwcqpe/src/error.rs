use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Domain(String),
    #[error("symmetry violation: {0}")]
    Symmetry(String),
    #[error("unsupported representation: {0}")]
    Unsupported(String),
    #[error("two-body tensor is not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("calibration: {0}")]
    Calibration(String),
    #[error("round {round}: {msg}")]
    RoundFailure { round: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
