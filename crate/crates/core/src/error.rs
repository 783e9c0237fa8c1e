use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Stream(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// Malformed line in one of the text formats (model file, suite file,
    /// post stream, Unicode data file).
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shared vocabulary is empty; sparsest slices: {}", format_sparsest(.sparsest))]
    EmptyVocabulary { sparsest: Vec<(String, usize)> },

    #[error("corpus has {found} in-vocabulary tokens, at least 2 are required")]
    TooFewTokens { found: usize },

    #[error("token `{0}` is not in the vocabulary")]
    UnknownToken(String),

    #[error("token `{0}` has a zero vector")]
    ZeroVector(String),

    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("insufficient data: need at least {needed}, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("degenerate sample: all values are identical")]
    DegenerateSample,

    #[error("beta = {0} is below the minimum of 2 (use the unsafe override to experiment)")]
    BetaBelowMinimum(f64),

    #[error("pair ({0}, {1}) is not flagged in the drift indicator")]
    PairNotFlagged(usize, usize),

    #[error("analogy suite is empty")]
    EmptySuite,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

fn format_sparsest(s: &[(String, usize)]) -> String {
    s.iter()
        .map(|(slice, n)| format!("{slice} ({n} distinct tokens)"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}
