use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty trace")]
    EmptyTrace,

    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no hazard estimate for sampled key {0}")]
    MissingHazard(u64),

    #[error("HR-E ordering requires equal object sizes (saw {0} and {1})")]
    UnequalSizes(u64, u64),

    #[error("future-use table has {table} entries but the trace has {trace}")]
    FutureLengthMismatch { table: usize, trace: usize },

    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),

    #[error("unsupported model format version {0}")]
    ModelVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
