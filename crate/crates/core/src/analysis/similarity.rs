use super::AnalysisError;
use crate::tensor::Tensor;

/// Symmetric `L x L` matrix of mean per-position cosine similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n)
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        (ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
    }
}

/// Entry `(i, j)` averages, over every `(batch, seq)` position, the cosine
/// between layer `i`'s and layer `j`'s hidden vector. A zero vector scores 0
/// but still counts toward the mean. The diagonal is 1 by definition.
pub fn layer_similarity(hidden: &[Tensor]) -> Result<SimilarityMatrix, AnalysisError> {
    let first = hidden.first().ok_or(AnalysisError::Empty)?;
    let shape = first.shape();
    let h = *shape.last().ok_or_else(|| AnalysisError::NotMatrix(shape.to_vec()))?;
    if let Some(bad) = hidden.iter().find(|t| t.shape() != shape) {
        return Err(AnalysisError::ShapeMismatch {
            expected: shape.to_vec(),
            found: bad.shape().to_vec(),
        });
    }
    let n = hidden.len();
    let positions = first.numel() / h;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in i + 1..n {
            let total: f64 = hidden[i]
                .data()
                .chunks_exact(h)
                .zip(hidden[j].data().chunks_exact(h))
                .map(|(a, b)| cosine(a, b))
                .sum();
            let mean = total / positions as f64;
            values[i * n + j] = mean;
            values[j * n + i] = mean;
        }
    }
    Ok(SimilarityMatrix { n, values })
}
