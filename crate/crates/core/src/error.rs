use thiserror::Error;

use crate::ids::EventId;

/// Errors produced by the modeling, fitting and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("event {event_id}: {reason}")]
    InvalidEvent { event_id: EventId, reason: String },

    #[error("{what} must be a probability in [0, 1], got {value}")]
    InvalidProbability { what: String, value: f64 },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("group size {size} exceeds population of {population}")]
    GroupTooLarge { size: usize, population: usize },

    #[error("log-likelihood is not finite at the starting point; input is inconsistent with the fixed preferences")]
    NonFiniteLikelihood,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
