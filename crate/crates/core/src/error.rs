use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value breaks one of the model invariants.
    #[error("invalid configuration: `{field}` {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    /// An argument lies outside the domain of the operation.
    #[error("`{what}` out of domain: {reason}")]
    Domain { what: &'static str, reason: String },

    #[error("the rsma scheme needs a power/rate split (give one or request optimization)")]
    MissingSplit,

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: u64, got: u64 },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            what,
            reason: reason.into(),
        }
    }
}
