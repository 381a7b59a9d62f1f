//! Model configurations, registered by name. A variant decides whether the
//! structural tables and projection exist and how each table starts out.

use crate::embedding::{EmbeddingConfig, StructTable};

pub trait ModelVariant: Send + Sync {
    fn name(&self) -> &'static str;
    fn uses_structure(&self) -> bool;
    /// Initializer name and its parameter for one structural table.
    fn table_init(&self, table: StructTable, cfg: &EmbeddingConfig) -> (&'static str, f64);
}

/// Token and positional tables only.
pub struct Plain;

impl ModelVariant for Plain {
    fn name(&self) -> &'static str {
        "gpt2"
    }

    fn uses_structure(&self) -> bool {
        false
    }

    fn table_init(&self, _table: StructTable, cfg: &EmbeddingConfig) -> (&'static str, f64) {
        ("truncated-normal", cfg.init_std)
    }
}

/// Structural tables with truncated-normal initialization.
pub struct RandomStructure;

impl ModelVariant for RandomStructure {
    fn name(&self) -> &'static str {
        "gpt2-re"
    }

    fn uses_structure(&self) -> bool {
        true
    }

    fn table_init(&self, _table: StructTable, cfg: &EmbeddingConfig) -> (&'static str, f64) {
        ("truncated-normal", cfg.init_std)
    }
}

/// Structural tables with sinusoidal part and time tables.
pub struct SinusoidalStructure;

impl ModelVariant for SinusoidalStructure {
    fn name(&self) -> &'static str {
        "gpt2-se"
    }

    fn uses_structure(&self) -> bool {
        true
    }

    fn table_init(&self, table: StructTable, cfg: &EmbeddingConfig) -> (&'static str, f64) {
        match table {
            StructTable::Part => ("sinusoidal", cfg.w_part),
            StructTable::Time => ("sinusoidal", cfg.w_time),
            StructTable::Type | StructTable::Pc => ("truncated-normal", cfg.init_std),
        }
    }
}

static VARIANTS: [&dyn ModelVariant; 3] = [&Plain, &RandomStructure, &SinusoidalStructure];

pub fn variants() -> &'static [&'static dyn ModelVariant] {
    &VARIANTS
}

pub fn variant(name: &str) -> Option<&'static dyn ModelVariant> {
    VARIANTS.iter().copied().find(|v| v.name() == name)
}
