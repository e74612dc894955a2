//! The TOML file read by `--config`. Every section and key is optional.
//!
//! ```toml
//! [recommender]
//! w2 = 0.25
//! alpha = 1.0
//! k = 10
//!
//! [service]
//! poll_interval_ms = 3000
//! snapshot_every = 1000
//!
//! [fit]
//! l2_penalty = 1e-3
//! pref_source = "first-voter-logistic"
//!
//! [synthetic]
//! events = 300
//! group_sizes = [2, 4, 8]
//!
//! [eval]
//! split = 0.8
//! threshold = 0.5
//! ```

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use concord_core::inference::FitConfig;
use concord_core::synth::SyntheticConfig;
use concord_service::{RecommenderConfig, ServiceConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub poll_interval_ms: u64,
    pub snapshot_every: u64,
}

impl Default for ServiceSection {
    fn default() -> Self {
        let d = ServiceConfig::default();
        Self { poll_interval_ms: d.poll_interval_ms, snapshot_every: d.snapshot_every }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Training fraction of the chronological split.
    pub split: f64,
    pub threshold: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { split: 0.8, threshold: 0.5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub recommender: RecommenderConfig,
    pub service: ServiceSection,
    pub fit: FitConfig,
    pub synthetic: SyntheticConfig,
    pub eval: EvalSection,
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// `--seed` replaces every seed in the file.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(seed) = seed {
            self.synthetic.seed = seed;
            self.fit.seed = seed;
        }
        self
    }

    pub fn service_config(&self) -> ServiceConfig {
        ServiceConfig {
            recommender: self.recommender.clone(),
            poll_interval_ms: self.service.poll_interval_ms,
            snapshot_every: self.service.snapshot_every,
        }
    }
}
