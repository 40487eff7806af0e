use crate::increg::PruneReport;

/// Errors produced anywhere in the pruning engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("index {index} out of range for {what} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("inconsistent pruned state: {0}")]
    InconsistentState(String),

    /// The scheduler hit its iteration budget before every layer reached
    /// its target. The report collected so far is attached.
    #[error("pruning did not converge within {iterations} iterations")]
    NonConvergence {
        iterations: u64,
        report: Box<PruneReport>,
    },

    #[error("no local minimum: {0}")]
    NoMinimum(String),

    #[error("singular point: {0}")]
    Singular(String),

    #[error("malformed data at byte offset {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
