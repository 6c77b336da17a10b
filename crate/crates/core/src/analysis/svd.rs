//! Singular values by one-sided Jacobi rotations.

/// Singular values of a row-major `rows x cols` matrix, descending.
pub fn singular_values(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(a.len(), rows * cols, "buffer does not match {rows}x{cols}");
    // orthogonalize the columns of the tall orientation
    let n = rows.min(cols);
    let mut c: Vec<Vec<f64>> = if rows >= cols {
        (0..cols).map(|j| (0..rows).map(|i| a[i * cols + j]).collect()).collect()
    } else {
        a.chunks_exact(cols).map(<[f64]>::to_vec).collect()
    };
    debug_assert_eq!(c.len(), n);
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&c[p], &c[p]);
                let beta = dot(&c[q], &c[q]);
                let gamma = dot(&c[p], &c[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (lo, hi) = c.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = cs * xp - sn * yq;
                    *y = sn * xp + cs * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = c.iter().map(|col| dot(col, col).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_wide() {
        let s = singular_values(&[2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 3.0], 3, 3);
        assert_eq!(s, vec![3.0, 2.0, 1.0]);
        // [[3, 0, 4]] has a single singular value 5
        let s = singular_values(&[3.0, 0.0, 4.0], 1, 3);
        assert_eq!(s.len(), 1);
        assert!((s[0] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[1, 1], [0, 1]]: sigma = (sqrt(5) +- 1) / 2
        let s = singular_values(&[1.0, 1.0, 0.0, 1.0], 2, 2);
        let phi = (5f64.sqrt() + 1.0) / 2.0;
        assert!((s[0] - phi).abs() < 1e-14);
        assert!((s[1] - 1.0 / phi).abs() < 1e-14);
    }
}
