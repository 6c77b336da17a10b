//! Exact `x^n` with PolyReLU neurons of order `r`.
//!
//! Write `n` in base `r` and square-and-multiply along the chain
//! `y_0 = x, y_{i+1} = y_i^r`. Signed powers use the pair
//! `ReLU(z)^k + (-1)^k ReLU(-z)^k = z^k` and products use
//! `uv = ((u + v)^2 - (u - v)^2) / 4`.

use super::builder::{Builder, Carry, Expr, Family, Plan};
use super::net::{Act, Layer, LayeredNet};
use super::NetError;

/// Base-`r` digits of `n`, least significant first.
pub fn digits(mut n: u32, r: u32) -> Vec<u32> {
    let mut d = Vec::new();
    while n > 0 {
        d.push(n % r);
        n /= r;
    }
    d
}

/// Signed power `z^k` from two neurons.
struct Power {
    p: usize,
    q: usize,
    k: usize,
}

impl Power {
    fn push(plan: &mut Plan, z: &Expr, k: usize, order: usize) -> Self {
        let (p, q) = plan.pair(z, Act::poly_monomial(k, order));
        Self { p, q, k }
    }

    fn value(&self, out: &[Expr]) -> Expr {
        let sign = if self.k % 2 == 0 { 1.0 } else { -1.0 };
        out[self.p].axpy(sign, &out[self.q])
    }
}

/// Network computing `x^n` for all real `x`.
pub fn power_net(n: u32, r: usize) -> Result<LayeredNet, NetError> {
    if n == 0 {
        return Err(NetError::Invalid("power n must be at least 1".into()));
    }
    if r < 2 {
        return Err(NetError::Invalid(format!("PolyReLU order must be at least 2, got {r}")));
    }
    if n == 1 {
        return LayeredNet::new(1, vec![Layer::affine(vec![vec![(0, 1.0)]], vec![0.0])]);
    }
    let fam = Family::PolyRelu { order: r };
    let ds = digits(n, r as u32);
    let (mut b, x) = Builder::new(1);
    let mut y = x[0].clone();
    let mut acc: Option<Expr> = None;
    for (i, &c) in ds.iter().enumerate() {
        let last = i + 1 == ds.len();
        let mut plan = Plan::default();
        let next = (!last).then(|| Power::push(&mut plan, &y, r, r));
        let t = match c {
            0 => None,
            1 => Some(Err(Carry::push(&mut plan, &y, fam))),
            k => Some(Ok(Power::push(&mut plan, &y, k as usize, r))),
        };
        let acc_carry = match (&acc, &t) {
            (Some(a), _) => Some(Carry::push(&mut plan, a, fam)),
            _ => None,
        };
        if plan.is_empty() {
            continue;
        }
        let out = b.layer(plan);
        let t_val = t.map(|t| match t {
            Ok(p) => p.value(&out),
            Err(c) => c.value(&out),
        });
        let acc_val = acc_carry.map(|c| c.value(&out));
        y = next.map(|p| p.value(&out)).unwrap_or_default();
        acc = match (acc_val, t_val) {
            (Some(a), Some(t)) => {
                // product layer; carry y forward alongside
                let mut plan = Plan::default();
                let plus = Power::push(&mut plan, &a.plus(&t), 2, r);
                let minus = Power::push(&mut plan, &a.minus(&t), 2, r);
                let y_carry = (!last).then(|| Carry::push(&mut plan, &y, fam));
                let out = b.layer(plan);
                if let Some(c) = y_carry {
                    y = c.value(&out);
                }
                Some(plus.value(&out).minus(&minus.value(&out)).scale(0.25))
            }
            (a, t) => a.or(t),
        };
    }
    Ok(b.finish(vec![acc.expect("n >= 1 has a nonzero digit")]))
}
