//! CSV renderings and the combined analysis of a trained model.

use std::fmt::Write as _;

use super::cost::CostReport;
use super::rank::{rank_report, RankReport};
use super::similarity::{layer_similarity, SimilarityMatrix};
use super::AnalysisError;
use crate::tensor::Tensor;
use crate::trainer::data::eval_batches;
use crate::transformer::Transformer;

pub const RANK_CSV_HEADER: &str = "layer,matrix,effective_rank,full_rank";
pub const COST_CSV_HEADER: &str =
    "method,checkpointing,intermediate_size,flops_for_activation,flops_ratio,flops_ratio_percent,memory_overhead,memory_bytes";

pub fn rank_csv(rows: &[RankReport]) -> String {
    let mut s = format!("{RANK_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.layer, r.matrix.name(), r.effective_rank, r.full_rank);
    }
    s
}

/// `layer,l0,l1,...` header followed by one row per layer.
pub fn similarity_csv(m: &SimilarityMatrix) -> String {
    let mut s = String::from("layer");
    for j in 0..m.len() {
        let _ = write!(s, ",l{j}");
    }
    s.push('\n');
    for (i, row) in m.rows().enumerate() {
        let _ = write!(s, "{i}");
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn cost_csv(rows: &[CostReport]) -> String {
    let mut s = format!("{COST_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.kind,
            r.checkpointing,
            r.intermediate_text(),
            r.flops_text(),
            r.ratio_text(),
            r.ratio_percent_text(),
            r.memory_text(),
            r.memory_overhead_bytes
        );
    }
    s
}

/// Rank and similarity diagnostics of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelAnalysis {
    pub ranks: Vec<RankReport>,
    pub similarity: SimilarityMatrix,
}

/// Effective ranks of the FFN weights plus layer similarity of hidden
/// states over `n_batches` evenly spaced `batch x seq` windows of `tokens`.
pub fn analyze_model(
    model: &Transformer,
    tokens: &[usize],
    n_batches: usize,
    batch: usize,
    seq: usize,
) -> Result<ModelAnalysis, AnalysisError> {
    let batches = eval_batches(tokens, n_batches, batch, seq).map_err(|e| AnalysisError::Invalid(e.to_string()))?;
    let n_layers = model.config().n_layers;
    let mut per_layer: Vec<Vec<f64>> = vec![Vec::new(); n_layers];
    for (x, _) in &batches {
        for (acc, h) in per_layer.iter_mut().zip(model.hidden_states(x, batch, seq)?) {
            acc.extend_from_slice(h.data());
        }
    }
    let h = model.config().d_model;
    let hidden = per_layer
        .into_iter()
        .map(|d| Tensor::new(vec![n_batches * batch, seq, h], d))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ModelAnalysis {
        ranks: rank_report(model)?,
        similarity: layer_similarity(&hidden)?,
    })
}
