use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use rawmuse_core::augment::AugmentSpec;
use rawmuse_core::metrics::EvalConfig;
use rawmuse_model::{ModelConfig, ProtocolConfig, TrainConfig};

/// Everything `--config` can set. Missing sections keep their defaults;
/// command-line flags override what the file says.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub generate: ProtocolConfig,
    pub eval: EvalConfig,
    pub augment: AugmentSpec,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
