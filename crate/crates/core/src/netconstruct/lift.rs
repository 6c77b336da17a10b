//! Exact PolyReLU realizations: lifting ReLU nets, polynomials as two
//! PolyReLU branches, and piecewise-linear functions.

use serde::{Deserialize, Serialize};

use super::builder::{Builder, Expr, Family, Plan};
use super::net::{Act, LayeredNet};
use super::NetError;

/// Replace every ReLU by the PolyReLU `(0, 1, 0, ..)` of the given order.
/// Identity neurons are kept; PolyReLU neurons are rejected.
pub fn lift_relu_to_polyrelu(net: &LayeredNet, order: usize) -> Result<LayeredNet, NetError> {
    if order < 1 {
        return Err(NetError::Invalid("PolyReLU order must be at least 1".into()));
    }
    let mut layers = net.layers().to_vec();
    for (l, layer) in layers.iter_mut().enumerate() {
        for act in &mut layer.acts {
            match act {
                Act::Relu => *act = Act::poly_monomial(1, order),
                Act::Identity => {}
                Act::PolyRelu(_) => {
                    return Err(NetError::Invalid(format!("layer {l} already has PolyReLU neurons")));
                }
            }
        }
    }
    LayeredNet::new(net.input_dim(), layers)
}

/// Coefficients `(b1, b2)` with `p(x) = PolyReLU_b1(x) + PolyReLU_b2(-x)`.
///
/// `ReLU(x)^i + (-1)^i ReLU(-x)^i = x^i` for `i >= 1`; the constant goes to
/// the first branch only.
pub fn poly_to_polyrelu_pair(p: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NetError> {
    if p.is_empty() {
        return Err(NetError::Invalid("empty polynomial".into()));
    }
    let mut b1 = p.to_vec();
    if b1.len() < 2 {
        b1.push(0.0);
    }
    let b2 = b1
        .iter()
        .enumerate()
        .map(|(i, &a)| match i {
            0 => 0.0,
            _ if i % 2 == 1 => -a,
            _ => a,
        })
        .collect();
    Ok((b1, b2))
}

/// Depth-2 net `x -> PolyReLU_b1(x) + PolyReLU_b2(-x)` computing `p`.
pub fn poly_net(p: &[f64]) -> Result<LayeredNet, NetError> {
    let (b1, b2) = poly_to_polyrelu_pair(p)?;
    let (mut b, x) = Builder::new(1);
    let mut plan = Plan::default();
    let u = plan.push(x[0].clone(), Act::PolyRelu(b1));
    let v = plan.push(x[0].scale(-1.0), Act::PolyRelu(b2));
    let out = b.layer(plan);
    Ok(b.finish(vec![out[u].plus(&out[v])]))
}

/// Continuous piecewise-linear function on the real line: slope `slopes[k]`
/// on the k-th piece, value `intercept + slopes[0] x` left of the first
/// breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub intercept: f64,
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(intercept: f64, breakpoints: Vec<f64>, slopes: Vec<f64>) -> Result<Self, NetError> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(NetError::Invalid(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NetError::Invalid("breakpoints must be strictly increasing".into()));
        }
        if breakpoints.iter().chain(&slopes).chain([&intercept]).any(|v| !v.is_finite()) {
            return Err(NetError::Invalid("non-finite piecewise-linear data".into()));
        }
        Ok(Self {
            intercept,
            breakpoints,
            slopes,
        })
    }

    /// Trapezoid: 0 outside `[-2, 2]`, 1 on `[-1, 1]`, linear ramps between.
    pub fn trapezoid() -> Self {
        Self::new(0.0, vec![-2.0, -1.0, 1.0, 2.0], vec![0.0, 1.0, 0.0, -1.0, 0.0]).expect("valid")
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.intercept + self.slopes[0] * x;
        for (k, &b) in self.breakpoints.iter().enumerate() {
            v += (self.slopes[k + 1] - self.slopes[k]) * (x - b).max(0.0);
        }
        v
    }

    /// One hidden ReLU layer plus an affine output.
    pub fn to_relu_net(&self) -> LayeredNet {
        let (mut b, x) = Builder::new(1);
        let x = &x[0];
        let mut plan = Plan::default();
        let lin = (self.slopes[0] != 0.0).then(|| plan.pair(x, Act::Relu));
        let kinks: Vec<(usize, f64)> = self
            .breakpoints
            .iter()
            .enumerate()
            .map(|(k, &bk)| (plan.push(x.shift(-bk), Act::Relu), self.slopes[k + 1] - self.slopes[k]))
            .collect();
        if plan.is_empty() {
            // constant function: a single dead unit keeps the net well formed
            plan.push(x.scale(0.0), Act::Relu);
        }
        let out = b.layer(plan);
        let mut y = Expr::constant(self.intercept);
        if let Some((p, q)) = lin {
            y = y.axpy(self.slopes[0], &out[p].minus(&out[q]));
        }
        for (i, d) in kinks {
            y = y.axpy(d, &out[i]);
        }
        b.finish(vec![y])
    }
}

/// Exact PolyReLU realization of a piecewise-linear function.
pub fn pwl_to_polyrelu(f: &PiecewiseLinear, order: usize) -> Result<LayeredNet, NetError> {
    lift_relu_to_polyrelu(&f.to_relu_net(), order)
}

/// Same construction built directly in a given family.
pub fn pwl_net(f: &PiecewiseLinear, fam: Family) -> Result<LayeredNet, NetError> {
    match fam {
        Family::Relu => Ok(f.to_relu_net()),
        Family::PolyRelu { order } => pwl_to_polyrelu(f, order),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netconstruct::net::random_relu_net;

    fn grid(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
    }

    #[test]
    fn lift_preserves_function_and_size() {
        for seed in 0..5 {
            let relu = random_relu_net(1, &[8, 8], seed);
            let poly = lift_relu_to_polyrelu(&relu, 3).unwrap();
            assert_eq!((poly.size(), poly.depth()), (relu.size(), relu.depth()));
            for x in grid(201, -1.0, 1.0) {
                assert_eq!(poly.eval1(x), relu.eval1(x));
            }
        }
        let poly = lift_relu_to_polyrelu(&random_relu_net(1, &[2], 0), 2).unwrap();
        assert!(lift_relu_to_polyrelu(&poly, 2).is_err());
    }

    #[test]
    fn square_as_pair() {
        let (b1, b2) = poly_to_polyrelu_pair(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!((b1, b2), (vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]));
        let net = poly_net(&[0.0, 0.0, 1.0]).unwrap();
        for x in grid(101, -1.0, 1.0) {
            assert!((net.eval1(x) - x * x).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_and_constant_polynomials() {
        let net = poly_net(&[0.0, 1.0]).unwrap();
        let c = poly_net(&[2.5]).unwrap();
        for x in grid(11, -3.0, 3.0) {
            assert_eq!(net.eval1(x), x);
            assert_eq!(c.eval1(x), 2.5);
        }
    }

    #[test]
    fn cubic_with_constant() {
        let p = [0.5, -1.0, 0.25, 2.0];
        let net = poly_net(&p).unwrap();
        for x in grid(41, -2.0, 2.0) {
            let want = 0.5 - x + 0.25 * x * x + 2.0 * x * x * x;
            assert!((net.eval1(x) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_is_exact() {
        let t = PiecewiseLinear::trapezoid();
        let net = pwl_to_polyrelu(&t, 3).unwrap();
        let want = |x: f64| (2.0 - x.abs()).clamp(0.0, 1.0);
        for x in grid(801, -4.0, 4.0) {
            assert_eq!(t.eval(x), want(x));
            assert!((net.eval1(x) - want(x)).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn absolute_value_and_constant() {
        let abs = PiecewiseLinear::new(0.0, vec![0.0], vec![-1.0, 1.0]).unwrap();
        let net = pwl_to_polyrelu(&abs, 2).unwrap();
        for x in grid(21, -2.0, 2.0) {
            assert_eq!(net.eval1(x), x.abs());
        }
        let flat = PiecewiseLinear::new(1.5, vec![], vec![0.0]).unwrap();
        assert_eq!(pwl_to_polyrelu(&flat, 2).unwrap().eval1(0.3), 1.5);
    }

    #[test]
    fn unsorted_breakpoints_rejected() {
        assert!(PiecewiseLinear::new(0.0, vec![1.0, -1.0], vec![0.0, 1.0, 0.0]).is_err());
        assert!(PiecewiseLinear::new(0.0, vec![1.0], vec![0.0]).is_err());
    }
}
