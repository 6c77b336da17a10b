use serde::{Deserialize, Serialize};

use super::TrainError;

/// Warmup length, given directly in optimizer steps or as a token budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warmup {
    Steps(usize),
    Tokens(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub peak_lr: f64,
    pub min_lr: f64,
    pub warmup: Warmup,
    pub total_steps: usize,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub clip_norm: f64,
    pub batch_size: usize,
    pub seq_len: usize,
    pub seed: u64,
    /// A metrics record (with a validation pass) is emitted every this many steps.
    pub eval_every: usize,
    pub eval_batches: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            peak_lr: 3e-4,
            min_lr: 3e-5,
            warmup: Warmup::Steps(100),
            total_steps: 2000,
            weight_decay: 0.1,
            beta1: 0.9,
            beta2: 0.95,
            adam_eps: 1e-8,
            clip_norm: 1.0,
            batch_size: 8,
            seq_len: 32,
            seed: 0,
            eval_every: 100,
            eval_batches: 8,
        }
    }
}

impl TrainConfig {
    pub fn tokens_per_step(&self) -> u64 {
        (self.batch_size * self.seq_len) as u64
    }

    /// Warmup in steps; a token budget is rounded up to whole steps.
    pub fn warmup_steps(&self) -> usize {
        match self.warmup {
            Warmup::Steps(s) => s,
            Warmup::Tokens(t) => t.div_ceil(self.tokens_per_step().max(1)) as usize,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::Config(msg));
        if !(self.min_lr > 0.0 && self.min_lr <= self.peak_lr && self.peak_lr.is_finite()) {
            return bad(format!(
                "need 0 < min_lr <= peak_lr, got min {} peak {}",
                self.min_lr, self.peak_lr
            ));
        }
        let warmup = self.warmup_steps();
        // a zero-step run only evaluates, so it has no schedule to speak of
        if self.total_steps > 0 && warmup >= self.total_steps {
            return bad(format!(
                "warmup ({warmup} steps) must be shorter than total_steps ({})",
                self.total_steps
            ));
        }
        if !(self.clip_norm > 0.0) {
            return bad(format!("clip_norm must be positive, got {}", self.clip_norm));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad(format!("betas must lie in [0, 1), got {} {}", self.beta1, self.beta2));
        }
        if !(self.weight_decay >= 0.0) || !(self.adam_eps > 0.0) {
            return bad("weight_decay must be >= 0 and adam_eps > 0".into());
        }
        if self.batch_size == 0 || self.seq_len == 0 || self.eval_every == 0 || self.eval_batches == 0 {
            return bad("batch_size, seq_len, eval_every and eval_batches must be positive".into());
        }
        Ok(())
    }
}
