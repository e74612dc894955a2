//! Group decision modeling: the decision cascade model, maximum-likelihood
//! estimation of pairwise social influence, content-based group
//! recommendation and offline evaluation.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the service and CLI use.

// `!(x >= 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cascade;
pub mod error;
pub mod eval;
pub mod eventlog;
pub mod ids;
pub mod inference;
pub mod recommender;
pub mod scalar;
pub mod synth;

pub use cascade::{CascadeEvent, CastVote, Vote};
pub use error::{Error, Result};
pub use ids::{EventId, ItemId, UserId};
pub use scalar::Scalar;

pub type CascadeParams = cascade::CascadeParams<f64>;
pub type GroupScoreWeights = recommender::GroupScoreWeights<f64>;
pub type MetricsReport = eval::MetricsReport<f64>;
pub type BenchmarkReport = eval::BenchmarkReport<f64>;
pub type Prediction = inference::Prediction<f64>;
pub type ScoredItem = recommender::ScoredItem<f64>;
