use thiserror::Error;

/// Error type shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is out of its documented range.
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter { field: &'static str, message: String },

    /// An exhaustive routine was asked to handle an instance beyond its
    /// hard capacity bound.
    #[error("instance too large for {what}: {message}")]
    CapacityExceeded { what: &'static str, message: String },

    /// A numerical routine was evaluated outside its mathematical domain.
    #[error("domain error in {what}: {message}")]
    Domain { what: &'static str, message: String },

    /// A root finder did not observe a sign change in its bracket.
    #[error("no transition in range: {0}")]
    NoTransition(String),

    /// A fit or estimator was given too little data.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter { field, message: message.into() }
    }
}
