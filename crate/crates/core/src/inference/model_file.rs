use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FitConfig, FitReport};
use crate::cascade::CascadeParams;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk form of a fitted model: parameters, the configuration that
/// produced them, and the solver report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub version: u32,
    pub params: CascadeParams<f64>,
    pub config: FitConfig,
    pub report: FitReport,
}

impl FittedModel {
    pub fn new(params: CascadeParams<f64>, config: FitConfig, report: FitReport) -> Self {
        Self { version: MODEL_FORMAT_VERSION, params, config, report }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: FittedModel = serde_json::from_str(text)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
                model.version
            )));
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
