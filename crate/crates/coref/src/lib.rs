//! End-to-end neural coreference resolution: span enumeration and pruning,
//! head-finding attention, a bilinear antecedent scorer with a joint
//! mention-detection objective, greedy decoding, and the standard
//! MUC / B-cubed / CEAF evaluation stack with bootstrap significance
//! testing. Everything runs on a hand-rolled reverse-mode tape in f64 and
//! is deterministic under a seed.

pub mod antecedent;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod math;
pub mod metrics;
pub mod model;
pub mod spans;
pub mod training;

pub use config::{ModelConfig, RunConfig, TrainConfig};
pub use corpus::{CorpusSplit, Document};
pub use error::{Error, Result};
pub use model::{CorefModel, Pretrained};
