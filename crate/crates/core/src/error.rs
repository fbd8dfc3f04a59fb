use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("config: missing key `{0}`")]
    MissingKey(String),

    #[error("config: key `{key}` is not a number")]
    NotNumeric { key: String },

    #[error("config: unknown key `{0}`")]
    UnknownKey(String),

    #[error("config: both `{0}` and `{0}_db` given")]
    DuplicateKey(String),

    #[error("config: {0}")]
    Parse(String),

    #[error("{key} out of range: {reason}")]
    OutOfRange { key: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unbounded power: both multipliers vanish on interval {interval}")]
    Unbounded { interval: usize },

    #[error("{what} did not converge after {iterations} iterations (bracket [{lo}, {hi}])")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        lo: f64,
        hi: f64,
    },

    #[error("sample-level simulation needs n <= {cap}, got n = {n}")]
    SampleCapExceeded { n: u64, cap: u64 },

    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    #[error("every sensing-grid point failed: {0}")]
    AllGridPointsFailed(String),
}

impl Error {
    pub(crate) fn range(key: &str, reason: impl Into<String>) -> Self {
        Error::OutOfRange {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
