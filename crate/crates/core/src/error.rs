use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    #[error("no Steiner triple system construction for v = {0} (need v = 1 or 3 mod 6, v >= 7)")]
    UnsupportedOrder(usize),

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("detection produced an empty honest set")]
    DegenerateDetection,

    #[error("capacity exceeded: {0}")]
    Capacity(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by a bad configuration rather than a runtime
    /// protocol failure.
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::ProtocolViolation(_) | Error::DegenerateDetection)
    }
}
