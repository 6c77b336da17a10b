//! Training recipe: AdamW with decoupled weight decay, linear warmup into a
//! cosine decay, global gradient-norm clipping, byte-level data, and metric
//! logging to JSONL and CSV.

mod config;
pub mod data;
mod metrics;
mod optim;
mod schedule;
pub mod sweep;
mod train;

pub use config::{TrainConfig, Warmup};
pub use data::{char_corpus, decode, encode, synthetic_corpus, Batcher, CharCorpus, VOCAB_SIZE};
pub use metrics::{read_metrics_jsonl, MetricsRecord, MetricsWriter, CSV_HEADER};
pub use optim::{clip_grad_norm, AdamW};
pub use schedule::cosine_lr;
pub use sweep::{run_sweep, SweepKind, SweepRun, SweepVariant};
pub use train::{data_seed, train_loop, TrainOutcome};

use thiserror::Error;

use crate::transformer::TransformerError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("non-finite loss or gradient at step {step} (lr {lr:e}, grad norm {grad_norm})")]
    NonFinite { step: usize, lr: f64, grad_norm: f64 },
    #[error("non-finite gradient for `{0}`")]
    NonFiniteGrad(String),
    #[error(transparent)]
    Model(#[from] TransformerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
