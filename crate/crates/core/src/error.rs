use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no frames")]
    NoFrames,

    #[error("gap in trace: window {window} contains no frames")]
    GapInTrace { window: usize },

    #[error("invalid frame log: {0}")]
    InvalidFrameLog(String),

    #[error("incomplete ladder: window {window} has no entry for crf {crf}")]
    IncompleteLadder { window: usize, crf: u32 },

    #[error("duplicate row at line {line}: window {window}, crf {crf}")]
    DuplicateRow { line: u64, window: usize, crf: u32 },

    #[error("line {line}: cannot parse {field} from {value:?}")]
    Parse {
        line: u64,
        field: &'static str,
        value: String,
    },

    #[error("invalid ladder: {0}")]
    InvalidLadder(String),

    #[error("insufficient trace length: {required} windows required, {available} available")]
    InsufficientTrace { required: usize, available: usize },

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("invalid target grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between traces {first:?} and {other:?}")]
    GridMismatch { first: String, other: String },

    #[error("demand of trace {0:?} has not been sanitized")]
    Unsanitized(String),

    #[error("window {t} out of range (trace has {len} windows)")]
    WindowOutOfRange { t: usize, len: usize },

    #[error("target {0} is not on the grid")]
    TargetNotOnGrid(u32),

    #[error("invalid utility curve: {0}")]
    InvalidCurve(String),

    #[error("demand decreases from {r_from} to {r_to} bits/s; demand must be sanitized")]
    NegativeRateStep { r_from: f64, r_to: f64 },

    #[error("brute force search space of {size} assignments exceeds the guard of {limit}; use a smaller instance")]
    SearchSpaceTooLarge { size: u128, limit: u128 },

    #[error("invalid allocation input: {0}")]
    InvalidInput(String),

    #[error("session {session:?} has {available} windows, scenario needs {required}")]
    SessionTooShort {
        session: String,
        required: usize,
        available: usize,
    },

    #[error("no records")]
    EmptyRecords,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
