use serde::{Deserialize, Serialize};

use super::svd::singular_values;
use super::AnalysisError;
use crate::tensor::Tensor;
use crate::transformer::Transformer;

/// Singular values below this fraction of the largest are dropped.
pub const RANK_FLOOR: f64 = 1e-12;

/// `exp` of the Shannon entropy of the normalized singular values.
pub fn effective_rank(a: &Tensor) -> Result<f64, AnalysisError> {
    let (rows, cols) = match *a.shape() {
        [r, c] => (r, c),
        _ => return Err(AnalysisError::NotMatrix(a.shape().to_vec())),
    };
    let s = singular_values(a.data(), rows, cols);
    let top = s[0];
    if !(top > 0.0) {
        return Err(AnalysisError::ZeroMatrix);
    }
    let kept: Vec<f64> = s.into_iter().filter(|&v| v > RANK_FLOOR * top).collect();
    let total: f64 = kept.iter().sum();
    let entropy: f64 = kept
        .iter()
        .map(|v| {
            let p = v / total;
            -p * p.ln()
        })
        .sum();
    Ok(entropy.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixTag {
    #[serde(rename = "W_up")]
    Up,
    #[serde(rename = "W_down")]
    Down,
}

impl MatrixTag {
    pub fn name(self) -> &'static str {
        match self {
            Self::Up => "W_up",
            Self::Down => "W_down",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub layer: usize,
    pub matrix: MatrixTag,
    pub effective_rank: f64,
    pub full_rank: usize,
}

/// Effective rank of every FFN's up (`W1`) and down (`W2`) projection.
pub fn rank_report(model: &Transformer) -> Result<Vec<RankReport>, AnalysisError> {
    let mut out = Vec::with_capacity(2 * model.config().n_layers);
    for layer in 0..model.config().n_layers {
        let (w1, w2) = model.ffn_weights(layer);
        for (matrix, w) in [(MatrixTag::Up, w1), (MatrixTag::Down, w2)] {
            out.push(RankReport {
                layer,
                matrix,
                effective_rank: effective_rank(w)?,
                full_rank: w.shape()[0].min(w.shape()[1]),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let eye = Tensor::new(vec![3, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((effective_rank(&eye).unwrap() - 3.0).abs() < 1e-12);
        let outer = Tensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, 2.0, 4.0, 6.0]).unwrap();
        assert!((effective_rank(&outer).unwrap() - 1.0).abs() < 1e-12);
        let d = Tensor::new(vec![3, 3], vec![2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let by_hand = (0.5 * 2f64.ln() + 2.0 * 0.25 * 4f64.ln()).exp();
        assert!((effective_rank(&d).unwrap() - by_hand).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(effective_rank(&Tensor::zeros(vec![2, 2])), Err(AnalysisError::ZeroMatrix)));
        assert!(matches!(effective_rank(&Tensor::zeros(vec![4])), Err(AnalysisError::NotMatrix(_))));
    }
}
