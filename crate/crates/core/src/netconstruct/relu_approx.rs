//! ReLU networks approximating `x^2`, single PolyReLU activations and whole
//! normalized PolyReLU networks.

use super::builder::{Builder, Carry, Expr, Family, Plan};
use super::combine::{compose, pre_affine, stack};
use super::net::{Act, LayeredNet};
use super::NetError;

/// Sawtooth depth `m` for `x^2` on `[0, 1]`: the smallest `m` with
/// `2^(-2m-2) <= eps`.
pub fn square_stages(eps: f64) -> Result<usize, NetError> {
    check_eps(eps)?;
    let mut m = 0;
    while square_error_bound(m) > eps {
        m += 1;
    }
    Ok(m)
}

/// Worst-case error of the `m`-stage sawtooth approximation of `x^2`.
pub fn square_error_bound(m: usize) -> f64 {
    0.25f64.powi(m as i32 + 1)
}

fn check_eps(eps: f64) -> Result<(), NetError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(NetError::Invalid(format!("eps must lie in (0, 1), got {eps}")))
    }
}

/// Run `m` sawtooth stages on each input in `[0, 1]`, carrying nonnegative
/// values with one ReLU and signed values with a ReLU pair. Returns the
/// squares, then the carried values.
fn square_layers(
    b: &mut Builder,
    inputs: Vec<Expr>,
    m: usize,
    nonneg: Vec<Expr>,
    signed: Vec<Expr>,
) -> (Vec<Expr>, Vec<Expr>, Vec<Expr>) {
    // (g, acc) per gadget: g_s is the s-fold tooth, acc = x - sum g_j / 4^j
    let mut state: Vec<(Expr, Expr)> = inputs.into_iter().map(|e| (e.clone(), e)).collect();
    let (mut nonneg, mut signed) = (nonneg, signed);
    for s in 1..=m {
        let mut plan = Plan::default();
        let idx: Vec<(usize, usize, usize)> = state
            .iter()
            .map(|(g, acc)| {
                let a = plan.push(g.clone(), Act::Relu);
                let h = plan.push(g.shift(-0.5), Act::Relu);
                let p = plan.push(acc.clone(), Act::Relu);
                (a, h, p)
            })
            .collect();
        let nn: Vec<usize> = nonneg.iter().map(|e| plan.push(e.clone(), Act::Relu)).collect();
        let sg: Vec<Carry> = signed.iter().map(|e| Carry::push(&mut plan, e, Family::Relu)).collect();
        let out = b.layer(plan);
        let w = 0.25f64.powi(s as i32);
        state = idx
            .into_iter()
            .map(|(a, h, p)| {
                let g = out[a].scale(2.0).axpy(-4.0, &out[h]);
                let acc = out[p].axpy(-w, &g);
                (g, acc)
            })
            .collect();
        nonneg = nn.into_iter().map(|i| out[i].clone()).collect();
        signed = sg.iter().map(|c| c.value(&out)).collect();
    }
    (state.into_iter().map(|(_, acc)| acc).collect(), nonneg, signed)
}

/// ReLU net `f` on `[0, 1]` with `x^2 <= f(x) <= x^2 + eps`.
pub fn relu_approx_square(eps: f64) -> Result<LayeredNet, NetError> {
    let m = square_stages(eps)?;
    let (mut b, x) = Builder::new(1);
    let (sq, _, _) = square_layers(&mut b, x, m, vec![], vec![]);
    Ok(b.finish(sq))
}

/// Error budget multiplier: monomial `i >= 2` is built from `i - 1` chained
/// products and carries at most `(2i - 3)` square errors.
fn monomial_weight(c: &[f64]) -> f64 {
    c.iter()
        .enumerate()
        .skip(2)
        .map(|(i, a)| a.abs() * (2 * i - 3) as f64)
        .sum()
}

/// ReLU net approximating `x -> PolyReLU_c(x)` on `[-1, 1]` to `eps`.
///
/// Coefficients must lie in `[-1, 1]`. When `sum |c_i| <= 1` the output is
/// also clamped into `[-1, 1]`, which never increases the error.
pub fn relu_approx_polyrelu(c: &[f64], eps: f64) -> Result<LayeredNet, NetError> {
    check_eps(eps)?;
    if c.is_empty() || c.iter().any(|a| !(a.abs() <= 1.0)) {
        return Err(NetError::Invalid("PolyReLU coefficients must lie in [-1, 1]".into()));
    }
    let deg = c.iter().rposition(|&a| a != 0.0).unwrap_or(0);
    let (mut b, x) = Builder::new(1);
    let mut plan = Plan::default();
    let yi = plan.push(x[0].clone(), Act::Relu);
    let mut y = b.layer(plan)[yi].clone();
    let mut acc = Expr::constant(c[0]).axpy(c.get(1).copied().unwrap_or(0.0), &y);

    if deg >= 2 {
        let delta = eps / monomial_weight(c);
        let m = square_stages(delta.min(0.5))?;
        let signed = |a: &Expr| if a.is_constant() { vec![] } else { vec![a.clone()] };
        let rejoin = |a: &Expr, carried: Vec<Expr>| carried.into_iter().next().unwrap_or_else(|| a.clone());

        let (sq, nn, sg) = square_layers(&mut b, vec![y.clone()], m, vec![y.clone()], signed(&acc));
        let mut prev = sq[0].clone();
        y = nn[0].clone();
        acc = rejoin(&acc, sg).axpy(c[2], &prev);

        for (i, &ci) in c.iter().enumerate().take(deg + 1).skip(3) {
            // clamp prev into [0, 1] before reuse
            let mut plan = Plan::default();
            let lo = plan.push(prev.clone(), Act::Relu);
            let hi = plan.push(prev.shift(-1.0), Act::Relu);
            let yk = plan.push(y.clone(), Act::Relu);
            let ac = (!acc.is_constant()).then(|| Carry::push(&mut plan, &acc, Family::Relu));
            let out = b.layer(plan);
            let u = out[lo].minus(&out[hi]);
            y = out[yk].clone();
            if let Some(ac) = ac {
                acc = ac.value(&out);
            }
            let w = u.plus(&y).scale(0.5);
            let keep_y = if i < deg { vec![y.clone()] } else { vec![] };
            let (sq, nn, sg) = square_layers(&mut b, vec![w, u, y.clone()], m, keep_y, signed(&acc));
            // uv = 2((u + v)/2)^2 - u^2/2 - v^2/2
            prev = sq[0].scale(2.0).axpy(-0.5, &sq[1]).axpy(-0.5, &sq[2]);
            if let Some(v) = nn.into_iter().next() {
                y = v;
            }
            acc = rejoin(&acc, sg).axpy(ci, &prev);
        }
    }

    let l1: f64 = c.iter().map(|a| a.abs()).sum();
    if l1 <= 1.0 && !acc.is_constant() {
        let mut plan = Plan::default();
        let p = plan.push(acc.shift(1.0), Act::Relu);
        let q = plan.push(acc.shift(-1.0), Act::Relu);
        let out = b.layer(plan);
        acc = out[p].minus(&out[q]).shift(-1.0);
    }
    Ok(b.finish(vec![acc]))
}

/// Largest `|d/dz PolyReLU_c(z)|` over `z` in `[-1, 1]`, sampled on a
/// `10^4` grid of `[0, 1]` (the derivative vanishes for `z < 0`).
pub fn polyrelu_lipschitz(c: &[f64]) -> f64 {
    let n = 10_000;
    (0..=n)
        .map(|k| {
            let t = k as f64 / n as f64;
            c.iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, &a)| acc * t + i as f64 * a)
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Per-layer tolerances `eps / (L alpha^(L - i))`, `i = 1..=L`.
pub fn tolerance_schedule(eps: f64, depth: usize, alpha: f64) -> Vec<f64> {
    (1..=depth)
        .map(|i| eps / (depth as f64 * alpha.powi((depth - i) as i32)))
        .collect()
}

const NORM_SLACK: f64 = 1e-12;

/// Check the normalization the conversion relies on: every layer is
/// PolyReLU, each neuron has `||w||_1 + |b| <= 1` and `sum |c_i| <= 1`.
pub fn check_normalized(net: &LayeredNet) -> Result<(), NetError> {
    for (l, layer) in net.layers().iter().enumerate() {
        for (j, ((row, b), act)) in layer.rows.iter().zip(&layer.bias).zip(&layer.acts).enumerate() {
            let Act::PolyRelu(c) = act else {
                return Err(NetError::Invalid(format!("layer {l} neuron {j} is not PolyReLU")));
            };
            let w1: f64 = row.iter().map(|p| p.1.abs()).sum::<f64>() + b.abs();
            if w1 > 1.0 + NORM_SLACK {
                return Err(NetError::Invalid(format!("layer {l} neuron {j}: ||w||_1 + |b| = {w1} > 1")));
            }
            let c1: f64 = c.iter().map(|a| a.abs()).sum();
            if c1 > 1.0 + NORM_SLACK {
                return Err(NetError::Invalid(format!("layer {l} neuron {j}: sum |c_i| = {c1} > 1")));
            }
        }
    }
    Ok(())
}

/// ReLU net within `eps` of a normalized PolyReLU net on `[-1, 1]^d`.
///
/// Layer `i` activations are replaced by approximations with tolerance
/// `eps / (L alpha^(L - i))`; `alpha` must bound every activation's
/// Lipschitz constant on `[-1, 1]`.
pub fn relu_approx_polyrelu_net(net: &LayeredNet, eps: f64, alpha: f64) -> Result<LayeredNet, NetError> {
    check_eps(eps)?;
    check_normalized(net)?;
    let lip = net
        .layers()
        .iter()
        .flat_map(|l| &l.acts)
        .map(|a| match a {
            Act::PolyRelu(c) => polyrelu_lipschitz(c),
            _ => 0.0,
        })
        .fold(0.0, f64::max);
    if !(alpha >= lip) {
        return Err(NetError::Invalid(format!(
            "alpha {alpha} is below the activation Lipschitz bound {lip}"
        )));
    }
    let tols = tolerance_schedule(eps, net.depth(), alpha);
    let mut result: Option<LayeredNet> = None;
    let mut width = net.input_dim();
    for (layer, &tol) in net.layers().iter().zip(&tols) {
        let mut parts = Vec::with_capacity(layer.width());
        for ((row, &bias), act) in layer.rows.iter().zip(&layer.bias).zip(&layer.acts) {
            let Act::PolyRelu(c) = act else { unreachable!("checked above") };
            let unit = relu_approx_polyrelu(c, tol)?;
            parts.push(pre_affine(&unit, std::slice::from_ref(row), &[bias], width)?);
        }
        let block = stack(&parts, Family::Relu)?;
        result = Some(match result {
            None => block,
            Some(prev) => compose(&prev, &block)?,
        });
        width = layer.width();
    }
    Ok(result.expect("nets have at least one layer"))
}

/// Random net satisfying [`check_normalized`]; dense rows with
/// `||w||_1 + |b|` and `sum |c_i|` drawn from `[0.5, 1]`.
pub fn random_normalized_polyrelu_net(input_dim: usize, widths: &[usize], order: usize, seed: u64) -> LayeredNet {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::new();
    let mut width = input_dim;
    for &w in widths {
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        let mut acts = Vec::new();
        for _ in 0..w {
            let mut v: Vec<f64> = (0..=width).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = rng.random_range(0.5..1.0) / v.iter().map(|x: &f64| x.abs()).sum::<f64>();
            v.iter_mut().for_each(|x| *x *= s);
            bias.push(v.pop().expect("bias"));
            rows.push(v);
            let mut c: Vec<f64> = (0..=order).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = rng.random_range(0.5..1.0) / c.iter().map(|x| x.abs()).sum::<f64>();
            c.iter_mut().for_each(|x| *x *= s);
            acts.push(Act::PolyRelu(c));
        }
        layers.push((rows, bias, acts));
        width = w;
    }
    LayeredNet::from_dense(input_dim, layers).expect("consistent dims")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
    }

    #[test]
    fn stage_counts() {
        assert_eq!(square_stages(0.25).unwrap(), 0);
        assert_eq!(square_stages(0.2).unwrap(), 1);
        assert_eq!(square_stages(1e-3).unwrap(), 4);
        assert!(square_stages(0.0).is_err());
    }

    #[test]
    fn square_error_within_bound_and_one_sided() {
        for eps in [0.1, 1e-2, 1e-3, 1e-4] {
            let net = relu_approx_square(eps).unwrap();
            assert!(net.hidden_acts_all(|a| *a == Act::Relu));
            let mut worst: f64 = 0.0;
            for x in grid(10_001, 0.0, 1.0) {
                let d = net.eval1(x) - x * x;
                assert!(d >= -1e-12);
                worst = worst.max(d);
            }
            assert!(worst <= eps, "eps {eps} err {worst}");
            assert!(worst <= square_error_bound(square_stages(eps).unwrap()) + 1e-12);
        }
    }

    fn max_err(net: &LayeredNet, c: &[f64]) -> f64 {
        grid(10_001, -1.0, 1.0)
            .map(|x| (net.eval1(x) - Act::PolyRelu(c.to_vec()).apply(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn polyrelu_approximation_meets_eps() {
        let c = [0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let net = relu_approx_polyrelu(&c, eps).unwrap();
            assert!(net.hidden_acts_all(|a| *a == Act::Relu));
            let e = max_err(&net, &c);
            assert!(e <= eps, "eps {eps} err {e}");
        }
        let wild = [-0.5, 0.9, -1.0, 0.7, 1.0];
        let net = relu_approx_polyrelu(&wild, 1e-3).unwrap();
        assert!(max_err(&net, &wild) <= 1e-3);
    }

    #[test]
    fn pure_relu_is_exact() {
        let net = relu_approx_polyrelu(&[0.0, 1.0, 0.0, 0.0], 1e-3).unwrap();
        assert_eq!(max_err(&net, &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn outputs_stay_in_unit_interval() {
        let c = [0.2, -0.3, 0.25, -0.25];
        let net = relu_approx_polyrelu(&c, 0.05).unwrap();
        for x in grid(1001, -1.0, 1.0) {
            assert!(net.eval1(x).abs() <= 1.0);
        }
        assert!(relu_approx_polyrelu(&[0.0, 1.5], 0.1).is_err());
    }

    #[test]
    fn schedule_example() {
        let t = tolerance_schedule(0.1, 2, 2.0);
        assert!((t[0] - 0.025).abs() < 1e-15 && (t[1] - 0.05).abs() < 1e-15);
        assert_eq!(tolerance_schedule(0.3, 1, 5.0), vec![0.3]);
    }

    #[test]
    fn lipschitz_of_cubic() {
        // derivative of (x + x^2 + x^3)/3 on [0,1] peaks at 2
        let l = polyrelu_lipschitz(&[0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert!((l - 2.0).abs() < 1e-12);
    }

    #[test]
    fn whole_net_conversion() {
        use rand::{Rng, SeedableRng};
        let net = random_normalized_polyrelu_net(2, &[4, 4], 3, 11);
        check_normalized(&net).unwrap();
        let alpha = 3.0;
        for eps in [0.1, 0.01] {
            let relu = relu_approx_polyrelu_net(&net, eps, alpha).unwrap();
            assert!(relu.hidden_acts_all(|a| *a == Act::Relu));
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
            for _ in 0..2000 {
                let x = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
                let want = net.eval(&x).unwrap();
                let got = relu.eval(&x).unwrap();
                for (a, b) in want.iter().zip(&got) {
                    assert!((a - b).abs() <= eps, "{a} vs {b}");
                }
            }
        }
        assert!(relu_approx_polyrelu_net(&net, 0.1, 0.01).is_err());
    }

    #[test]
    fn single_layer_matches_unit_approximation() {
        let net = random_normalized_polyrelu_net(1, &[1], 3, 2);
        let conv = relu_approx_polyrelu_net(&net, 0.02, 3.0).unwrap();
        for x in grid(101, -1.0, 1.0) {
            assert!((conv.eval1(x) - net.eval1(x)).abs() <= 0.02);
        }
    }
}
