use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ESI level {0} is outside 1-5")]
    InvalidEsi(i64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("missing input file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot render vignette: missing {0}")]
    Render(&'static str),

    #[error("complaint {0:?} is sex-linked and cannot be gender-swapped")]
    SexLinked(String),

    #[error("name pool for {0} has fewer than two names")]
    PoolExhausted(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Metric(#[from] crate::metrics::MetricError),

    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),

    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
