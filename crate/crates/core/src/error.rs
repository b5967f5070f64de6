use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("input {index} rejected: {source}")]
    BatchItem {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("empty input")]
    Empty,

    #[error("k = {k} is outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("lower bound exceeds upper bound at index {index}")]
    InvertedBounds { index: usize },

    #[error("row {row}, column {column}: cannot parse {value:?}")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("class {class:?} has a single sample and cannot be stratified")]
    SingletonClass { class: String },

    #[error("series too short: need at least {required} values, got {actual}")]
    SeriesTooShort { required: usize, actual: usize },

    #[error("targets have zero variance")]
    ZeroVariance,

    #[error("{phase}: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable, machine-parsable category used by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::DimensionMismatch { .. } => "dimension",
            Error::NonFinite { .. } => "non_finite",
            Error::BatchItem { source, .. } | Error::Phase { source, .. } => source.category(),
            Error::Empty | Error::KOutOfRange { .. } | Error::InvertedBounds { .. } => "input",
            Error::Parse { .. }
            | Error::Data(_)
            | Error::SingletonClass { .. }
            | Error::SeriesTooShort { .. }
            | Error::ZeroVariance => "data",
            Error::Io(_) => "io",
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => "io",
            Error::Json(_) | Error::Csv(_) => "format",
        }
    }

    pub(crate) fn in_phase(self, phase: &'static str) -> Error {
        Error::Phase {
            phase,
            source: Box::new(self),
        }
    }
}
