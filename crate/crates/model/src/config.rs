use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingConfig;
use crate::error::{arg_err, Result};
use crate::variant::variant;

/// Architecture of the decoder. `variant` names an entry of the variant
/// registry and decides which embedding tables exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub variant: String,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_hidden: usize,
    pub d_ff: usize,
    pub n_positions: usize,
    /// Applied to the embedding output and both residual branches.
    pub dropout: f64,
    pub embedding: EmbeddingConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::toy("gpt2")
    }
}

impl ModelConfig {
    /// Width-derived defaults: d_ff = 4·d_hidden, d_token = d_hidden,
    /// d_struct = d_hidden / 4.
    pub fn new(variant: &str, n_layers: usize, n_heads: usize, d_hidden: usize) -> Self {
        Self {
            variant: variant.to_string(),
            n_layers,
            n_heads,
            d_hidden,
            d_ff: 4 * d_hidden,
            n_positions: 1024,
            dropout: 0.0,
            embedding: EmbeddingConfig::for_width(d_hidden),
        }
    }

    /// 4 layers, 4 heads, width 256.
    pub fn toy(variant: &str) -> Self {
        Self::new(variant, 4, 4, 256)
    }

    pub fn head_dim(&self) -> usize {
        self.d_hidden / self.n_heads
    }

    pub fn uses_structure(&self) -> bool {
        variant(&self.variant).is_some_and(|v| v.uses_structure())
    }

    pub fn validate(&self) -> Result<()> {
        let Some(v) = variant(&self.variant) else {
            return arg_err(format!("unknown model variant {:?}", self.variant));
        };
        for (name, value) in [
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_hidden", self.d_hidden),
            ("d_ff", self.d_ff),
            ("n_positions", self.n_positions),
        ] {
            if value == 0 {
                return arg_err(format!("{name} must be at least 1"));
            }
        }
        if !self.d_hidden.is_multiple_of(self.n_heads) {
            return arg_err(format!(
                "d_hidden {} is not divisible by n_heads {}",
                self.d_hidden, self.n_heads
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return arg_err(format!("dropout {} must lie in [0, 1)", self.dropout));
        }
        if !v.uses_structure() && self.embedding.d_token != self.d_hidden {
            return arg_err("without a projection the token table must be d_hidden wide");
        }
        self.embedding.validate()
    }
}
