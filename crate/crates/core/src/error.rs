use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("zero matrix has no condition number")]
    ZeroMatrix,

    #[error("parameterization singular point")]
    SingularParameterization,

    #[error("matrix is singular")]
    Singular,

    #[error("rank-deficient weight matrix: {0}")]
    RankDeficient(String),

    #[error("unknown activation `{0}`")]
    UnknownActivation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("not an IDX file")]
    NotIdx,

    #[error("short read at offset {0}")]
    ShortRead(usize),

    #[error("dataset: {0}")]
    Data(String),

    #[error("numeric failure at epoch {epoch}, batch {batch}: {message}")]
    Numeric {
        epoch: usize,
        batch: usize,
        message: String,
    },

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
