use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block is rank deficient (smallest singular value {smallest_sv:e})")]
    RankDeficient { smallest_sv: f64 },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NonHermitian { asymmetry: f64 },

    #[error("block Lanczos breakdown at step {step}")]
    Breakdown { step: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("gamma_{index} is numerically singular or indefinite")]
    SingularGamma { index: usize },

    #[error("singular inner inverse at step {index}")]
    SingularStep { index: usize },

    #[error("shift lies on the spectrum (singular pivot at block {block})")]
    ShiftOnSpectrum { block: usize },

    #[error("decomposition has no residual block; tail parameters unavailable")]
    MissingTail,

    #[error("too few Ritz values for the contour window: found {found}, need {required}")]
    TooFewRitzValues { found: usize, required: usize },

    #[error("SMW update matrix is singular")]
    SingularUpdate,

    #[error("every contour node was skipped (Re F indefinite)")]
    AllNodesSkipped,

    #[error("empty phi history")]
    EmptyHistory,

    #[error("first-order pencil is singular")]
    SingularPencil,

    #[error("sigma must be positive (found {value} at node {node})")]
    NonPositiveSigma { node: usize, value: f64 },

    #[error("source locations {first} and {second} snap to the same node")]
    DuplicateNode { first: usize, second: usize },

    #[error("source location ({x}, {y}) is outside the interior region")]
    OutsideInterior { x: f64, y: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("Matrix Market header is not 'coordinate real symmetric': {0}")]
    NotSymmetricHeader(String),

    #[error("shifted matrix is singular")]
    SingularShift,

    #[error("iterative solver did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("decomposition was computed without keeping the Krylov basis")]
    MissingBasis,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

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
