use thiserror::Error;

use concord_core::{ItemId, UserId};

/// Failures of service operations. Each maps to one HTTP status.
#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown or revoked access token")]
    InvalidToken,

    #[error("only the event admin can do this")]
    NotAdmin,

    #[error("event closed")]
    EventClosed,

    #[error("unknown option {0}")]
    UnknownOption(String),

    #[error("item {0} is not in the catalog")]
    UnknownItem(ItemId),

    #[error("unknown user {0}")]
    UnknownUser(UserId),

    #[error("item {0} is already an option")]
    DuplicateOption(ItemId),

    #[error("event has no options to decide between")]
    NoOptions,

    #[error("{0}")]
    Invalid(String),

    #[error("journal: {0}")]
    Journal(String),

    #[error(transparent)]
    Core(#[from] concord_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
