//! Structural embeddings and a small decoder-only transformer over the
//! event vocabulary: training, KV-cached top-k generation and checkpoints.

pub mod checkpoint;
pub mod config;
pub mod embedding;
pub mod error;
pub mod generate;
pub mod layers;
pub mod loss;
pub mod optim;
pub mod params;
pub mod train;
pub mod transformer;
pub mod variant;

pub use config::ModelConfig;
pub use embedding::EmbeddingConfig;
pub use error::{Error, Result};
pub use generate::{generate, run_protocol, GenerateConfig, Generation, ProtocolConfig};
pub use params::Params;
pub use train::{Example, TrainConfig, Trainer};
pub use transformer::Model;
