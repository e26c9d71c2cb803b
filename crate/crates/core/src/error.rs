use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate element {element}: volume {volume:e}")]
    DegenerateElement { element: usize, volume: f64 },
    #[error("mesh is not conforming: {0}")]
    NonConforming(String),
    #[error("refinement closure did not terminate within {sweeps} sweeps")]
    ClosureBudget { sweeps: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("solver failed: {0}")]
    SolverFailure(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
