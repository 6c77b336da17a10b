//! Local Taylor approximation on a uniform grid, glued by a trapezoid
//! partition of unity, and its exact PolyReLU realization.

use super::builder::{Builder, Carry, Expr, Family, Plan};
use super::lift::poly_to_polyrelu_pair;
use super::net::{Act, LayeredNet};
use super::NetError;

/// Partial derivative oracle: `oracle(x, alpha)` returns `D^alpha f(x)`.
pub type DerivativeOracle<'a> = dyn Fn(&[f64], &[usize]) -> f64 + 'a;

const BALL_SLACK: f64 = 1e-12;

/// Trapezoid bump: 1 on `[-1, 1]`, 0 outside `[-2, 2]`.
pub fn phi(t: f64) -> f64 {
    (2.0 - t.abs()).clamp(0.0, 1.0)
}

/// Worst-case error `(2^d / n!) (2d / 3N)^n` for `f` in the unit ball.
pub fn error_bound(d: usize, n: usize, big_n: usize) -> f64 {
    2f64.powi(d as i32) / factorial(n) * (2.0 * d as f64 / (3.0 * big_n as f64)).powi(n as i32)
}

/// Smallest resolution guaranteeing [`error_bound`] `<= eps`:
/// `floor((2d/3) (2^d / (n! eps))^(1/n)) + 1`.
pub fn resolution_for(eps: f64, d: usize, n: usize) -> usize {
    let base = 2f64.powi(d as i32) / (factorial(n) * eps);
    (2.0 * d as f64 / 3.0 * base.powf(1.0 / n as f64)).floor() as usize + 1
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Multi-indices with `|alpha| < n` in `d` variables, graded order.
pub fn multi_indices(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|a: Vec<usize>| {
                let used: usize = a.iter().sum();
                (0..n - used).map(move |k| {
                    let mut b = a.clone();
                    b.push(k);
                    b
                })
            })
            .collect();
    }
    out.sort_by_key(|a| (a.iter().sum::<usize>(), a.iter().rev().cloned().collect::<Vec<_>>()));
    out
}

/// `f_N(x) = sum_m phi_m(x) P_m(x)` on `[-1, 1]^d`.
#[derive(Debug, Clone)]
pub struct GridApproximator {
    d: usize,
    n: usize,
    big_n: usize,
    indices: Vec<Vec<usize>>,
    /// Grid points `m` in lexicographic order, `m_k` in `-N..=N`.
    points: Vec<Vec<i64>>,
    /// `D^alpha f(m / N)` per point, aligned with `indices`.
    derivs: Vec<Vec<f64>>,
    /// `D^alpha f(m / N) / alpha!`.
    taylor: Vec<Vec<f64>>,
}

impl GridApproximator {
    /// Tabulate derivatives of `f` at every grid point. Fails if a tabulated
    /// derivative exceeds 1, i.e. `f` lies outside the unit ball.
    pub fn build(oracle: &DerivativeOracle<'_>, d: usize, n: usize, big_n: usize) -> Result<Self, NetError> {
        if !(1..=2).contains(&d) {
            return Err(NetError::Invalid(format!("grid approximator supports d in {{1, 2}}, got {d}")));
        }
        if n < 1 || big_n < 1 {
            return Err(NetError::Invalid("smoothness n and resolution N must be positive".into()));
        }
        let indices = multi_indices(d, n);
        let side: Vec<i64> = (-(big_n as i64)..=big_n as i64).collect();
        let points: Vec<Vec<i64>> = if d == 1 {
            side.iter().map(|&m| vec![m]).collect()
        } else {
            side.iter().flat_map(|&a| side.iter().map(move |&b| vec![a, b])).collect()
        };
        let mut derivs = Vec::with_capacity(points.len());
        let mut taylor = Vec::with_capacity(points.len());
        for m in &points {
            let x: Vec<f64> = m.iter().map(|&k| k as f64 / big_n as f64).collect();
            let mut dv = Vec::with_capacity(indices.len());
            let mut tv = Vec::with_capacity(indices.len());
            for a in &indices {
                let v = oracle(&x, a);
                if !(v.abs() <= 1.0 + BALL_SLACK) {
                    return Err(NetError::Invalid(format!(
                        "|D^{a:?} f({x:?})| = {v} exceeds 1; f is outside the unit ball"
                    )));
                }
                dv.push(v);
                tv.push(v / a.iter().map(|&k| factorial(k)).product::<f64>());
            }
            derivs.push(dv);
            taylor.push(tv);
        }
        Ok(Self {
            d,
            n,
            big_n,
            indices,
            points,
            derivs,
            taylor,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> usize {
        self.big_n
    }

    pub fn multi_indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    /// Tabulated `D^alpha f(m / N)` per grid point.
    pub fn derivatives(&self) -> &[Vec<f64>] {
        &self.derivs
    }

    pub fn bound(&self) -> f64 {
        error_bound(self.d, self.n, self.big_n)
    }

    /// `phi_m(x) = prod_k phi(3N (x_k - m_k / N))`.
    pub fn bump(&self, m: &[i64], x: &[f64]) -> f64 {
        let nn = self.big_n as f64;
        m.iter().zip(x).map(|(&mk, &xk)| phi(3.0 * nn * (xk - mk as f64 / nn))).product()
    }

    /// `sum_m phi_m(x)`; equals 1 on `[-1, 1]^d`.
    pub fn partition_sum(&self, x: &[f64]) -> f64 {
        self.points.iter().map(|m| self.bump(m, x)).sum()
    }

    fn check_point(&self, x: &[f64]) -> Result<(), NetError> {
        if x.len() != self.d {
            return Err(NetError::InputDim {
                expected: self.d,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !(v.abs() <= 1.0)) {
            return Err(NetError::Domain(format!("{x:?} is outside [-1, 1]^{}", self.d)));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, NetError> {
        self.check_point(x)?;
        let nn = self.big_n as f64;
        let side = 2 * self.big_n as i64 + 1;
        // only grid points within 2/(3N) of x carry weight
        let ranges: Vec<(i64, i64)> = x
            .iter()
            .map(|&xk| {
                let c = (xk * nn).round() as i64;
                ((c - 1).max(-(self.big_n as i64)), (c + 1).min(self.big_n as i64))
            })
            .collect();
        let mut total = 0.0;
        let mut visit = |m: &[i64]| {
            let w = self.bump(m, x);
            if w == 0.0 {
                return;
            }
            let idx = m.iter().fold(0i64, |acc, &mk| acc * side + mk + self.big_n as i64) as usize;
            let u: Vec<f64> = m.iter().zip(x).map(|(&mk, &xk)| xk - mk as f64 / nn).collect();
            let p: f64 = self
                .indices
                .iter()
                .zip(&self.taylor[idx])
                .map(|(a, &c)| c * a.iter().zip(&u).map(|(&k, &uk)| uk.powi(k as i32)).product::<f64>())
                .sum();
            total += w * p;
        };
        let (a0, a1) = ranges[0];
        for i in a0..=a1 {
            if self.d == 1 {
                visit(&[i]);
            } else {
                let (b0, b1) = ranges[1];
                for j in b0..=b1 {
                    visit(&[i, j]);
                }
            }
        }
        Ok(total)
    }

    /// Exact PolyReLU network computing `f_N` (affine output layer).
    ///
    /// Layer 1 holds the bump ramps and the local polynomial factors as
    /// signed-power pairs; later layers multiply through
    /// `ab = ((a + b)^2 - (a - b)^2) / 4`.
    pub fn to_net(&self) -> LayeredNet {
        let order = self.n.saturating_sub(1).max(2);
        let fam = Family::PolyRelu { order };
        let nn = self.big_n as f64;
        let (mut b, x) = Builder::new(self.d);

        let mut l1 = Plan::default();
        let locals: Vec<Local> = self
            .points
            .iter()
            .zip(&self.taylor)
            .map(|(m, coef)| self.plan_local(&mut l1, &x, m, coef, order, nn))
            .collect();
        let out1 = b.layer(l1);

        let mut total = Expr::default();
        if self.d == 1 {
            let mut l2 = Plan::default();
            let prods: Vec<Product> = locals
                .iter()
                .map(|loc| {
                    let (_, _, q) = &loc.terms[0];
                    Product::push(&mut l2, &loc.bumps[0].value(&out1), &q.value(&out1), order)
                })
                .collect();
            let out2 = b.layer(l2);
            for p in prods {
                total = total.plus(&p.value(&out2));
            }
        } else {
            let mut l2 = Plan::default();
            let staged: Vec<(Product, Vec<Carry>, Vec<Product>)> = locals
                .iter()
                .map(|loc| {
                    let bump =
                        Product::push(&mut l2, &loc.bumps[0].value(&out1), &loc.bumps[1].value(&out1), order);
                    let mut carried = Vec::new();
                    let mut prods = Vec::new();
                    for (_, u, q) in &loc.terms {
                        let qv = q.value(&out1);
                        match u {
                            None => carried.push(Carry::push(&mut l2, &qv, fam)),
                            Some(u) => prods.push(Product::push(&mut l2, &u.value(&out1), &qv, order)),
                        }
                    }
                    (bump, carried, prods)
                })
                .collect();
            let out2 = b.layer(l2);
            let mut l3 = Plan::default();
            let finals: Vec<Product> = staged
                .into_iter()
                .map(|(bump, carried, prods)| {
                    let poly = carried
                        .iter()
                        .map(|c| c.value(&out2))
                        .chain(prods.iter().map(|p| p.value(&out2)))
                        .fold(Expr::default(), |acc, e| acc.plus(&e));
                    Product::push(&mut l3, &bump.value(&out2), &poly, order)
                })
                .collect();
            let out3 = b.layer(l3);
            for p in finals {
                total = total.plus(&p.value(&out3));
            }
        }
        b.finish(vec![total])
    }

    fn plan_local(&self, plan: &mut Plan, x: &[Expr], m: &[i64], coef: &[f64], order: usize, nn: f64) -> Local {
        let unit = Act::poly_monomial(1, order);
        let bumps = m
            .iter()
            .enumerate()
            .map(|(k, &mk)| {
                let t = x[k].scale(3.0 * nn).shift(-3.0 * mk as f64);
                Ramps([(2.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-2.0, 1.0)]
                    .map(|(s, w)| (plan.push(t.shift(s), unit.clone()), w)))
            })
            .collect();
        let u: Vec<Expr> = m
            .iter()
            .enumerate()
            .map(|(k, &mk)| x[k].shift(-(mk as f64) / nn))
            .collect();
        let mut terms = Vec::new();
        if self.d == 1 {
            let mut p = vec![0.0; self.n];
            for (a, &c) in self.indices.iter().zip(coef) {
                p[a[0]] = c;
            }
            terms.push((0, None, PolyPair::push(plan, &u[0], &p, order)));
        } else {
            for a0 in 0..self.n {
                let mut q = vec![0.0; self.n - a0];
                for (a, &c) in self.indices.iter().zip(coef) {
                    if a[0] == a0 {
                        q[a[1]] = c;
                    }
                }
                if q.iter().all(|&c| c == 0.0) {
                    continue;
                }
                let upow = (a0 > 0).then(|| PolyPair::monomial(plan, &u[0], a0, order));
                terms.push((a0, upow, PolyPair::push(plan, &u[1], &q, order)));
            }
        }
        Local { bumps, terms }
    }
}

/// Four unit ramps summing to `phi(t)`.
struct Ramps([(usize, f64); 4]);

impl Ramps {
    fn value(&self, out: &[Expr]) -> Expr {
        self.0.iter().fold(Expr::default(), |e, &(i, w)| e.axpy(w, &out[i]))
    }
}

/// `p(z)` from the branches `PolyReLU_b1(z) + PolyReLU_b2(-z)`.
struct PolyPair(usize, usize);

impl PolyPair {
    fn push(plan: &mut Plan, z: &Expr, p: &[f64], order: usize) -> Self {
        let (b1, b2) = poly_to_polyrelu_pair(p).expect("non-empty");
        let u = plan.push(z.clone(), Act::PolyRelu(pad(b1, order)));
        let v = plan.push(z.scale(-1.0), Act::PolyRelu(pad(b2, order)));
        Self(u, v)
    }

    fn monomial(plan: &mut Plan, z: &Expr, k: usize, order: usize) -> Self {
        let mut p = vec![0.0; k + 1];
        p[k] = 1.0;
        Self::push(plan, z, &p, order)
    }

    fn value(&self, out: &[Expr]) -> Expr {
        out[self.0].plus(&out[self.1])
    }
}

/// `ab` from four squaring neurons.
struct Product([usize; 4]);

impl Product {
    fn push(plan: &mut Plan, a: &Expr, c: &Expr, order: usize) -> Self {
        let sq = Act::poly_monomial(2, order);
        let (p1, q1) = plan.pair(&a.plus(c), sq.clone());
        let (p2, q2) = plan.pair(&a.minus(c), sq);
        Self([p1, q1, p2, q2])
    }

    fn value(&self, out: &[Expr]) -> Expr {
        let [p1, q1, p2, q2] = self.0;
        out[p1].plus(&out[q1]).minus(&out[p2]).minus(&out[q2]).scale(0.25)
    }
}

struct Local {
    bumps: Vec<Ramps>,
    /// (power of the first coordinate, its signed power, polynomial in the last coordinate)
    terms: Vec<(usize, Option<PolyPair>, PolyPair)>,
}

fn pad(mut c: Vec<f64>, order: usize) -> Vec<f64> {
    c.resize(order + 1, 0.0);
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `sin(pi x) / pi^3` and its derivatives; all of order <= 3 are bounded by 1.
    fn sine(x: &[f64], a: &[usize]) -> f64 {
        let t = PI * x[0];
        let k = a[0];
        let base = match k % 4 {
            0 => t.sin(),
            1 => t.cos(),
            2 => -t.sin(),
            _ => -t.cos(),
        };
        base * PI.powi(k as i32 - 3)
    }

    fn sine2(x: &[f64], a: &[usize]) -> f64 {
        sine(&x[..1], &a[..1]) * sine(&x[1..], &a[1..]) * PI.powi(3)
    }

    #[test]
    fn bound_example_and_resolution() {
        assert!((error_bound(1, 3, 4) - 1.0 / 648.0).abs() < 1e-15);
        for (eps, d, n) in [(1e-3, 1, 3), (1e-6, 2, 3), (0.05, 1, 2)] {
            let big_n = resolution_for(eps, d, n);
            assert!(error_bound(d, n, big_n) <= eps);
        }
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1, 3), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(multi_indices(2, 3).len(), 6);
        assert_eq!(multi_indices(2, 1), vec![vec![0, 0]]);
    }

    #[test]
    fn partition_of_unity() {
        let g1 = GridApproximator::build(&sine, 1, 3, 4).unwrap();
        for i in 0..=1000 {
            let x = -1.0 + i as f64 / 500.0;
            assert!((g1.partition_sum(&[x]) - 1.0).abs() < 1e-12);
        }
        let g2 = GridApproximator::build(&sine2, 2, 3, 3).unwrap();
        for i in 0..=40 {
            for j in 0..=40 {
                let x = [-1.0 + i as f64 / 20.0, -1.0 + j as f64 / 20.0];
                assert!((g2.partition_sum(&x) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn error_within_bound() {
        for big_n in [2, 4, 8] {
            let g = GridApproximator::build(&sine, 1, 3, big_n).unwrap();
            let worst = (0..=10_000)
                .map(|i| {
                    let x = -1.0 + i as f64 / 5000.0;
                    (g.eval(&[x]).unwrap() - sine(&[x], &[0])).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst <= g.bound(), "N={big_n}: {worst} > {}", g.bound());
        }
    }

    #[test]
    fn linear_function_is_exact() {
        let f = |x: &[f64], a: &[usize]| match a[0] {
            0 => x[0],
            1 => 1.0,
            _ => 0.0,
        };
        let g = GridApproximator::build(&f, 1, 2, 3).unwrap();
        for i in 0..=100 {
            let x = -1.0 + i as f64 / 50.0;
            assert!((g.eval(&[x]).unwrap() - x).abs() < 1e-15);
        }
    }

    #[test]
    fn outside_ball_and_domain() {
        let big = |_: &[f64], _: &[usize]| 2.0;
        assert!(GridApproximator::build(&big, 1, 2, 2).is_err());
        let g = GridApproximator::build(&sine, 1, 3, 2).unwrap();
        assert!(matches!(g.eval(&[1.5]), Err(NetError::Domain(_))));
        assert!(GridApproximator::build(&sine, 3, 3, 2).is_err());
    }

    #[test]
    fn network_matches_formula() {
        let g1 = GridApproximator::build(&sine, 1, 3, 4).unwrap();
        let net = g1.to_net();
        assert!(net.hidden_acts_all(|a| matches!(a, Act::PolyRelu(_))));
        assert_eq!(net.size(), 10 * 9 + 1);
        for i in 0..=400 {
            let x = -1.0 + i as f64 / 200.0;
            assert!((net.eval1(x) - g1.eval(&[x]).unwrap()).abs() < 1e-12);
        }
        let g2 = GridApproximator::build(&sine2, 2, 3, 2).unwrap();
        let net2 = g2.to_net();
        for i in 0..=20 {
            for j in 0..=20 {
                let x = [-1.0 + i as f64 / 10.0, -1.0 + j as f64 / 10.0];
                let got = net2.eval(&x).unwrap()[0];
                assert!((got - g2.eval(&x).unwrap()).abs() < 1e-12, "{x:?}");
            }
        }
    }
}
