use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// No normalized reward vector rationalizes the recorded choices.
    #[error("inconsistent history: no reward vector rationalizes the {obs_count} observed choices")]
    InconsistentHistory { obs_count: u64 },

    #[error("confidence width needs at least 3 exploration steps, got {eta}")]
    Guard { eta: u64 },

    #[error("no information rent available: gap {gap} does not exceed twice the margin {varsigma}")]
    NoRent { gap: f64, varsigma: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
