//! TOML run configuration. Every section is optional; command-line flags
//! override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::activations::ActivationKind;
use crate::trainer::{TrainConfig, VOCAB_SIZE};
use crate::transformer::TransformerConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub model: ModelSection,
    pub train: TrainConfig,
    pub data: DataSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub activation: Option<ActivationKind>,
    pub poly_order: Option<usize>,
    pub n_layers: Option<usize>,
    pub d_model: Option<usize>,
    pub n_heads: Option<usize>,
    /// Defaults to the training sequence length.
    pub context_length: Option<usize>,
    pub ffn_multiple_of: Option<usize>,
    pub norm_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub corpus: Option<PathBuf>,
    /// Generate a synthetic corpus of this many bytes instead of reading one.
    pub synthetic_bytes: Option<usize>,
    /// Fraction of the corpus used for training; the rest is validation.
    pub split: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            corpus: None,
            synthetic_bytes: None,
            split: 0.9,
        }
    }
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("--config: cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("--config {}: {}", path.display(), e.message())))
}

impl ModelSection {
    /// Section with every field set, so it resolves back to `cfg`.
    pub fn from_resolved(cfg: &TransformerConfig) -> Self {
        Self {
            activation: Some(cfg.activation),
            poly_order: Some(cfg.poly_order),
            n_layers: Some(cfg.n_layers),
            d_model: Some(cfg.d_model),
            n_heads: Some(cfg.n_heads),
            context_length: Some(cfg.context_length),
            ffn_multiple_of: Some(cfg.ffn_multiple_of),
            norm_eps: Some(cfg.norm_eps),
        }
    }

    pub fn resolve(&self, seq_len: usize) -> TransformerConfig {
        let mut cfg = TransformerConfig::toy(
            self.activation.unwrap_or(ActivationKind::PolyRelu),
            self.n_layers.unwrap_or(2),
            self.d_model.unwrap_or(64),
            self.context_length.unwrap_or(seq_len),
        );
        cfg.vocab_size = VOCAB_SIZE;
        if let Some(h) = self.n_heads {
            cfg.n_heads = h;
        }
        if let Some(r) = self.poly_order {
            cfg.poly_order = r;
        }
        if let Some(m) = self.ffn_multiple_of {
            cfg.ffn_multiple_of = m;
        }
        if let Some(e) = self.norm_eps {
            cfg.norm_eps = e;
        }
        cfg
    }
}
