//! Ablation sweeps: one short training run per variant on a shared corpus,
//! config and seed, so only the activation differs between rows.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{train_loop, CharCorpus, MetricsRecord, MetricsWriter, TrainConfig, TrainError};
use crate::activations::ActivationKind;
use crate::transformer::{Transformer, TransformerConfig};

pub const SWEEP_CSV_HEADER: &str = "variant,activation,order,step,tokens_seen,train_loss,val_loss,val_ppl,lr,grad_norm,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// PolyReLU with r in {2, 3, 4}.
    Order,
    /// PolyReLU against PolyNorm at r = 3.
    Composition,
    /// ReLU, ReLU^2 and PolyReLU.
    ReluVariants,
}

impl SweepKind {
    pub const ALL: [SweepKind; 3] = [SweepKind::Order, SweepKind::Composition, SweepKind::ReluVariants];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Order => "order",
            SweepKind::Composition => "composition",
            SweepKind::ReluVariants => "relu-variants",
        }
    }

    pub fn variants(self) -> Vec<SweepVariant> {
        let v = |activation, order| SweepVariant { activation, order };
        match self {
            SweepKind::Order => (2..=4).map(|r| v(ActivationKind::PolyRelu, r)).collect(),
            SweepKind::Composition => vec![v(ActivationKind::PolyRelu, 3), v(ActivationKind::PolyNorm, 3)],
            SweepKind::ReluVariants => vec![
                v(ActivationKind::Relu, 3),
                v(ActivationKind::ReluSquared, 3),
                v(ActivationKind::PolyRelu, 3),
            ],
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| TrainError::Config(format!("unknown sweep {s:?}; expected order, composition or relu-variants")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SweepVariant {
    pub activation: ActivationKind,
    /// Polynomial order; ignored by activations without coefficients.
    pub order: usize,
}

impl SweepVariant {
    pub fn label(&self) -> String {
        if self.activation.has_coeffs() {
            format!("{}-r{}", self.activation, self.order)
        } else {
            self.activation.to_string()
        }
    }

    pub fn model_config(&self, base: &TransformerConfig) -> TransformerConfig {
        TransformerConfig {
            activation: self.activation,
            poly_order: self.order,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub variant: SweepVariant,
    pub records: Vec<MetricsRecord>,
    pub final_train_loss: f64,
}

/// Train every variant of `kind` from the same seed. With `out_dir`, each
/// run writes `<label>/metrics.{jsonl,csv}` and the sweep writes a combined
/// `sweep_<kind>.csv` with a leading variant column.
pub fn run_sweep(
    kind: SweepKind,
    base: &TransformerConfig,
    cfg: &TrainConfig,
    corpus: &CharCorpus,
    out_dir: Option<&Path>,
    mut progress: impl FnMut(&SweepVariant, &MetricsRecord),
) -> Result<Vec<SweepRun>, TrainError> {
    let mut runs = Vec::new();
    for variant in kind.variants() {
        let mc = variant.model_config(base);
        let mut model = Transformer::new(mc, cfg.seed)?;
        let mut writer = match out_dir {
            Some(dir) => {
                let d = dir.join(variant.label());
                fs::create_dir_all(&d)?;
                Some(MetricsWriter::create(&d.join("metrics.jsonl"), &d.join("metrics.csv"))?)
            }
            None => None,
        };
        let outcome = train_loop(&mut model, corpus, cfg, |rec| {
            progress(&variant, rec);
            match writer.as_mut() {
                Some(w) => w.write(rec),
                None => Ok(()),
            }
        })?;
        let final_train_loss = outcome.final_record().train_loss.unwrap_or(f64::NAN);
        runs.push(SweepRun {
            variant,
            records: outcome.records,
            final_train_loss,
        });
    }
    if let Some(dir) = out_dir {
        fs::write(dir.join(format!("sweep_{}.csv", kind.name())), sweep_csv(&runs))?;
    }
    Ok(runs)
}

pub fn sweep_csv(runs: &[SweepRun]) -> String {
    let mut s = format!("{SWEEP_CSV_HEADER}\n");
    for run in runs {
        for rec in &run.records {
            s.push_str(&format!(
                "{},{},{},{}\n",
                run.variant.label(),
                run.variant.activation,
                run.variant.order,
                rec.csv_row()
            ));
        }
    }
    s
}
