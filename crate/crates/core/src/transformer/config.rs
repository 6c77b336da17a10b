use serde::{Deserialize, Serialize};

use super::TransformerError;
use crate::activations::ActivationKind;

/// Shape of a decoder-only transformer. The FFN width is derived from the
/// activation so that every variant carries the same FFN parameter budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerConfig {
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub context_length: usize,
    pub vocab_size: usize,
    pub activation: ActivationKind,
    /// Polynomial order `r` for PolyReLU/PolyNorm; ignored otherwise.
    #[serde(default = "default_order")]
    pub poly_order: usize,
    /// SwiGLU width is rounded to the nearest multiple of this.
    #[serde(default = "default_multiple")]
    pub ffn_multiple_of: usize,
    #[serde(default = "default_norm_eps")]
    pub norm_eps: f64,
}

fn default_order() -> usize {
    3
}

fn default_multiple() -> usize {
    1
}

fn default_norm_eps() -> f64 {
    1e-5
}

impl TransformerConfig {
    /// Byte-level toy model: 257-token vocabulary, 4 heads.
    pub fn toy(activation: ActivationKind, n_layers: usize, d_model: usize, context_length: usize) -> Self {
        Self {
            n_layers,
            d_model,
            n_heads: 4,
            context_length,
            vocab_size: 257,
            activation,
            poly_order: default_order(),
            ffn_multiple_of: default_multiple(),
            norm_eps: default_norm_eps(),
        }
    }

    pub fn validate(&self) -> Result<(), TransformerError> {
        let bad = |msg: String| Err(TransformerError::Config(msg));
        if self.n_layers == 0 || self.d_model == 0 || self.n_heads == 0 {
            return bad("n_layers, d_model and n_heads must be positive".into());
        }
        if self.d_model % self.n_heads != 0 {
            return bad(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            ));
        }
        if self.context_length == 0 || self.vocab_size == 0 {
            return bad("context_length and vocab_size must be positive".into());
        }
        if self.activation.has_coeffs() && self.poly_order == 0 {
            return bad("poly_order must be at least 1".into());
        }
        if self.ffn_multiple_of == 0 {
            return bad("ffn_multiple_of must be positive".into());
        }
        if !(self.norm_eps > 0.0) {
            return bad(format!("norm_eps must be positive, got {}", self.norm_eps));
        }
        Ok(())
    }

    /// FFN width of the non-gated baseline, `4H`.
    pub fn baseline_intermediate_size(&self) -> usize {
        4 * self.d_model
    }

    /// `4H`, or `(8/3)H` rounded to the nearest multiple of `ffn_multiple_of`
    /// for SwiGLU (ties round up).
    pub fn intermediate_size(&self) -> usize {
        if self.activation.is_gated() {
            let m = self.ffn_multiple_of;
            let units = (16 * self.d_model + 3 * m) / (6 * m);
            (units * m).max(m)
        } else {
            self.baseline_intermediate_size()
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// Weight matrices per FFN: two, or three when gated.
    pub fn ffn_matrices(&self) -> usize {
        if self.activation.is_gated() {
            3
        } else {
            2
        }
    }

    pub fn ffn_params_per_layer(&self) -> usize {
        self.ffn_matrices() * self.d_model * self.intermediate_size()
    }

    pub fn coeffs_per_layer(&self) -> usize {
        if self.activation.has_coeffs() {
            self.poly_order + 1
        } else {
            0
        }
    }

    /// Total trainable scalars, matching [`super::Transformer::num_params`].
    pub fn num_params(&self) -> usize {
        let h = self.d_model;
        let per_layer = 2 * h + 4 * h * h + self.ffn_params_per_layer() + self.coeffs_per_layer();
        self.vocab_size * h * 2 + self.context_length * h + h + self.n_layers * per_layer
    }

    /// Standard deviation of the normal initializer, `1/sqrt(2.5 H)`.
    pub fn init_std(&self) -> f64 {
        1.0 / (2.5 * self.d_model as f64).sqrt()
    }
}
