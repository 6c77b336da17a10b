//! Toy decoder-only transformer whose feed-forward sublayer takes any
//! activation from [`crate::activations`].
//!
//! Blocks are pre-norm (RMSNorm with a learned gain), attention is causal
//! multi-head without biases, and positions are learned embeddings. SwiGLU
//! models shrink the FFN width to roughly `(8/3)H` so every variant spends
//! about `8H²` parameters per FFN.

mod checkpoint;
mod config;
mod model;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest, TensorEntry};
pub use config::TransformerConfig;
pub use model::{ffn_forward, ffn_forward_tensor, FfnVars, Forward, Param, ParamRole, Transformer};

use thiserror::Error;

use crate::activations::ActivationError;
use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum TransformerError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("sequence length {len} exceeds context length {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("token id {token} is outside the vocabulary of {vocab}")]
    TokenOutOfRange { token: usize, vocab: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
