use thiserror::Error;

use crate::topology::UnitId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("random regular graph generation failed after {attempts} attempts (n={n}, d={d})")]
    GenerationFailed { n: usize, d: usize, attempts: usize },

    #[error("{what} exceeds the size limit ({size} > {limit}); {hint}")]
    SizeLimit {
        what: &'static str,
        size: u128,
        limit: u128,
        hint: &'static str,
    },

    #[error("utility undefined for resource {0}: capacity is zero")]
    UndefinedUtility(UnitId),

    #[error("unit {0} has no available resource")]
    NoAvailableResource(UnitId),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("rejected move: {0}")]
    RejectedMove(String),

    #[error("invalid call: {0}")]
    InvalidCall(String),

    #[error("degenerate instance: every unit has zero demand")]
    DegenerateInstance,

    #[error("metrics requested on a run that did not complete the allocation")]
    MetricsOnPartial,

    #[error("parse error in {field}: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
