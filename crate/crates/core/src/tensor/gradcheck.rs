//! Central-difference gradient oracle.

use super::{Result, Tensor, TensorError};

/// Estimate `df/dx_i` as `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate.
pub fn finite_diff_grad<F>(f: F, x: &Tensor, h: f64) -> Result<Tensor>
where
    F: Fn(&Tensor) -> Result<f64>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(TensorError::Invalid(format!("step h must be positive, got {h}")));
    }
    let mut probe = x.clone();
    let mut grad = Vec::with_capacity(x.numel());
    for i in 0..x.numel() {
        let orig = probe.data[i];
        probe.data[i] = orig + h;
        let plus = f(&probe)?;
        probe.data[i] = orig - h;
        let minus = f(&probe)?;
        probe.data[i] = orig;
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(TensorError::NonFinite { op: "finite_diff_grad" });
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Tensor::new(x.shape().to_vec(), grad)
}

/// `|a - b| / max(|a|, |b|, 1e-6)`; the floor keeps near-zero gradients from
/// dominating the comparison.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
