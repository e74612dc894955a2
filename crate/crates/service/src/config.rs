use serde::{Deserialize, Serialize};

use concord_core::recommender::{DEFAULT_ALPHA, DEFAULT_LIST_LENGTH, DEFAULT_VARIANCE_WEIGHT};
use concord_core::GroupScoreWeights;

use crate::error::{Result, ServiceError};

/// Recommendation weights and smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecommenderConfig {
    /// Weight of the summed member predictions; `None` means `1/|G|`.
    pub w1: Option<f64>,
    /// Weight of the agreement term `1 - variance`.
    pub w2: f64,
    pub alpha: f64,
    pub k: usize,
}

impl Default for RecommenderConfig {
    fn default() -> Self {
        Self {
            w1: None,
            w2: DEFAULT_VARIANCE_WEIGHT,
            alpha: DEFAULT_ALPHA,
            k: DEFAULT_LIST_LENGTH,
        }
    }
}

impl RecommenderConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights(1)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(ServiceError::Invalid(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn weights(&self, group_size: usize) -> Result<GroupScoreWeights> {
        let weights = match self.w1 {
            Some(w1) => GroupScoreWeights::new(w1, self.w2)?,
            None => GroupScoreWeights::for_group(group_size, self.w2)?,
        };
        Ok(weights)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub recommender: RecommenderConfig,
    /// Refresh interval suggested to polling clients.
    pub poll_interval_ms: u64,
    /// Write a snapshot after this many journal entries.
    pub snapshot_every: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            recommender: RecommenderConfig::default(),
            poll_interval_ms: 3000,
            snapshot_every: 1000,
        }
    }
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<()> {
        self.recommender.validate()?;
        if self.snapshot_every == 0 {
            return Err(ServiceError::Invalid("snapshot_every must be at least 1".into()));
        }
        Ok(())
    }
}
