//! Group decision events shared through capability links.
//!
//! An admin creates an event with a few candidate items and invites
//! members; each member gets an unguessable token that grants access to
//! that one event. Members add options, vote, and comment; the admin
//! closes the event, which fixes the final decision. Every change is
//! journaled, and the journal doubles as the research event log that
//! [`Service::export_event_log`] turns into cascade events.

pub mod clock;
pub mod config;
pub mod error;
pub mod http;
pub mod journal;
pub mod model;
pub mod service;

pub use clock::{Clock, StepClock, SystemClock};
pub use config::{RecommenderConfig, ServiceConfig};
pub use error::{Result, ServiceError};
pub use service::{CreatedEvent, NewEvent, Service};
