use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset contains a non-finite value at sample {0}")]
    NonFiniteSample(usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("component {component} collapsed (responsibility mass {mass:e}); K is too large for the data")]
    DegenerateComponent { component: usize, mass: f64 },
    #[error("input block of component {0} is singular")]
    SingularInputBlock(usize),
    #[error("control {0} is not finite")]
    NonFiniteControl(f64),
    #[error("innovation target {0} is not finite")]
    NonFiniteInnovation(f64),
    #[error("control weights sum to zero")]
    DegenerateWeights,
    #[error("solver cost is not finite at iteration {iteration}: {cost}")]
    NonFiniteCost { iteration: usize, cost: f64 },
    #[error("unknown trajectory kind `{0}`")]
    UnknownKind(String),
    #[error("tracking log is empty")]
    EmptyLog,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid config at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },
    #[error("malformed file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user-supplied configuration.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::ConfigInvalid { .. } | Error::UnknownKind(_))
    }
}
