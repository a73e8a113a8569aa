use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A vehicle or task parameter is outside its valid domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    /// An input state contains NaN/Inf or violates a state invariant.
    #[error("invalid state: {0}")]
    InvalidState(String),
    /// A caller-supplied argument is invalid (step size, ranges, vector lengths...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The thrust allocation matrix cannot be inverted (zero arm length or torque coefficient).
    #[error("singular thrust allocation: {0}")]
    SingularAllocation(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn arg(reason: impl Into<String>) -> Self {
        Error::InvalidArgument(reason.into())
    }
}
