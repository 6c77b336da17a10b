//! Diagnostics: effective rank of FFN weights, layer-wise cosine similarity
//! of hidden states, and FLOPs/memory accounting for each activation.

pub mod cost;
mod rank;
mod report;
mod similarity;
pub mod svd;

pub use cost::{activation_cost, cost_table, CostKind, CostReport, Exact};
pub use rank::{effective_rank, rank_report, MatrixTag, RankReport, RANK_FLOOR};
pub use report::{
    analyze_model, cost_csv, rank_csv, similarity_csv, ModelAnalysis, COST_CSV_HEADER, RANK_CSV_HEADER,
};
pub use similarity::{layer_similarity, SimilarityMatrix};

use thiserror::Error;

use crate::tensor::TensorError;
use crate::transformer::TransformerError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("effective rank of an all-zero matrix is undefined")]
    ZeroMatrix,
    #[error("expected a matrix, got shape {0:?}")]
    NotMatrix(Vec<usize>),
    #[error("hidden states disagree in shape: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("no hidden states given")]
    Empty,
    #[error("unknown cost method `{0}`")]
    UnknownCostKind(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Model(#[from] TransformerError),
}
