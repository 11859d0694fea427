use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("time {t} outside the simulated horizon [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },
    #[error("calibration fit failed for flight {flight}: {reason}")]
    Fit { flight: String, reason: String },
    #[error("policy results do not cover identical scenario sets: {0}")]
    Coverage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
