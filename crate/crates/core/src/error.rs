use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("resampling failed: {0}")]
    Resample(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("cannot encode feature `{feature}`: unseen label `{label}`")]
    Encoding { feature: String, label: String },

    #[error("forecast error: {0}")]
    Forecast(String),

    #[error("invalid case: {0}")]
    Case(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Schema(_) | Error::ModelFormat(_) => 2,
            Error::Data(_) | Error::Encoding { .. } => 3,
            _ => 4,
        }
    }
}
