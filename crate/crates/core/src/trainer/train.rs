use std::time::Instant;

use super::data::{eval_batches, Batch, Batcher, CharCorpus};
use super::{clip_grad_norm, cosine_lr, AdamW, MetricsRecord, TrainConfig, TrainError};
use crate::tensor::TensorError;
use crate::transformer::{Transformer, TransformerError};

/// Everything a run produced besides the updated model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub records: Vec<MetricsRecord>,
    /// Training loss of every optimizer step, in order.
    pub step_losses: Vec<f64>,
    /// Pre-clip gradient norm of every step.
    pub grad_norms: Vec<f64>,
}

impl TrainOutcome {
    pub fn final_record(&self) -> &MetricsRecord {
        self.records.last().expect("a run always records step 0")
    }
}

/// Seed of the training batch stream, derived from the run seed so that
/// it differs from the initialization stream.
pub fn data_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

fn mean_loss(model: &Transformer, batches: &[Batch], cfg: &TrainConfig) -> Result<f64, TransformerError> {
    let mut total = 0.0;
    for (x, y) in batches {
        total += model.loss(x, y, cfg.batch_size, cfg.seq_len)?;
    }
    Ok(total / batches.len() as f64)
}

fn non_finite(step: usize, lr: f64, grad_norm: f64) -> impl FnOnce(TransformerError) -> TrainError {
    move |e| match e {
        TransformerError::Tensor(TensorError::NonFinite { .. }) => TrainError::NonFinite { step, lr, grad_norm },
        other => TrainError::Model(other),
    }
}

/// Train for `cfg.total_steps` AdamW updates. Update `t` (1-based) uses
/// `cosine_lr(t)`. A record with a validation pass is handed to `on_record`
/// at step 0, every `eval_every` steps, and at the last step.
pub fn train_loop(
    model: &mut Transformer,
    corpus: &CharCorpus,
    cfg: &TrainConfig,
    mut on_record: impl FnMut(&MetricsRecord) -> Result<(), TrainError>,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let mc = model.config();
    if cfg.seq_len > mc.context_length {
        return Err(TrainError::Config(format!(
            "seq_len {} exceeds the model context length {}",
            cfg.seq_len, mc.context_length
        )));
    }
    if corpus.vocab_size > mc.vocab_size {
        return Err(TrainError::Config(format!(
            "corpus vocabulary {} exceeds the model vocabulary {}",
            corpus.vocab_size, mc.vocab_size
        )));
    }
    let start = Instant::now();
    let val = eval_batches(&corpus.val, cfg.eval_batches, cfg.batch_size, cfg.seq_len)?;
    let mut batcher = Batcher::new(&corpus.train, cfg.batch_size, cfg.seq_len, data_seed(cfg.seed))?;
    let mut opt = AdamW::new(model.params(), cfg);
    let mut out = TrainOutcome {
        records: Vec::new(),
        step_losses: Vec::with_capacity(cfg.total_steps),
        grad_norms: Vec::with_capacity(cfg.total_steps),
    };

    let mut emit = |model: &Transformer, step: usize, window: &[f64], grad_norm: Option<f64>| {
        let lr = cosine_lr(step, cfg);
        let val_loss = mean_loss(model, &val, cfg).map_err(non_finite(step, lr, grad_norm.unwrap_or(f64::NAN)))?;
        let rec = MetricsRecord {
            step,
            tokens_seen: step as u64 * cfg.tokens_per_step(),
            train_loss: (!window.is_empty()).then(|| window.iter().sum::<f64>() / window.len() as f64),
            val_loss,
            val_ppl: val_loss.exp(),
            lr,
            grad_norm,
            wall_ms: start.elapsed().as_millis() as u64,
        };
        on_record(&rec)?;
        Ok::<_, TrainError>(rec)
    };

    out.records.push(emit(model, 0, &[], None)?);
    let mut window_start = 0;
    let mut last_norm = f64::NAN;
    for step in 1..=cfg.total_steps {
        let lr = cosine_lr(step, cfg);
        let (x, y) = batcher.next_batch();
        let (loss, mut grads) = model
            .loss_and_grads(&x, &y, cfg.batch_size, cfg.seq_len)
            .map_err(non_finite(step, lr, last_norm))?;
        let norm = clip_grad_norm(&mut grads, cfg.clip_norm);
        if !loss.is_finite() || !norm.is_finite() {
            return Err(TrainError::NonFinite { step, lr, grad_norm: norm });
        }
        opt.step(model.params_mut(), &grads, lr).map_err(|e| match e {
            TrainError::NonFiniteGrad(_) => TrainError::NonFinite { step, lr, grad_norm: norm },
            other => other,
        })?;
        last_norm = norm;
        out.step_losses.push(loss);
        out.grad_norms.push(norm);
        if step % cfg.eval_every == 0 || step == cfg.total_steps {
            let rec = emit(model, step, &out.step_losses[window_start..], Some(norm))?;
            out.records.push(rec);
            window_start = out.step_losses.len();
        }
    }
    Ok(out)
}
