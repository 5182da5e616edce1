use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("window of length {0} is too short for a wavelet summary")]
    WindowTooShort(usize),
    #[error("empty feature stream")]
    EmptyStream,
    #[error("stream of {len} frames is shorter than the minimum segment length {min}")]
    StreamTooShort { len: usize, min: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("no training example for label {0}")]
    MissingLabel(String),
    #[error("state-machine violation: {0}")]
    IllegalDelta(String),
    #[error("exhaustive search over {got} segments exceeds the limit of {limit}")]
    TooManySegments { got: usize, limit: usize },
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("inconsistent parse graph: {0}")]
    Inconsistent(String),
    #[error("key mismatch: {0}")]
    KeyMismatch(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("model: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(line: usize, msg: impl std::fmt::Display) -> Self {
        Error::Format {
            line,
            msg: msg.to_string(),
        }
    }
}
