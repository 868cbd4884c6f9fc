use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("simulation diverged at t = {time} s")]
    Divergence { time: f64 },

    #[error("resolvent is singular near omega = {omega} rad/s (pole on the imaginary axis)")]
    PoleProximity { omega: f64 },

    #[error("outside the modeled envelope: {0}")]
    Domain(String),

    #[error("trim failed at w = {wind} m/s after {iterations} iterations (residual {residual:e})")]
    Trim {
        wind: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("LPV build failed: {0}")]
    Build(String),

    #[error("wind speed {wind} m/s outside the allowed span [{lo}, {hi}] m/s")]
    Extrapolation { wind: f64, lo: f64, hi: f64 },

    #[error("plant design ({cs}, {cd}) outside the family hull")]
    OutOfHull { cs: f64, cd: f64 },

    #[error("average power undefined for a {0} solution")]
    UndefinedPower(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
