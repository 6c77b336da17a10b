//! Size and error audits of the constructions as the tolerance shrinks.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::grid::{resolution_for, GridApproximator};
use super::net::{Act, LayeredNet, Scalar};
use super::power::power_net;
use super::relu_approx::{
    polyrelu_lipschitz, random_normalized_polyrelu_net, relu_approx_polyrelu, relu_approx_polyrelu_net,
    relu_approx_square,
};
use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Audit {
    SquareRate,
    PolyReluRate,
    PolyReluNet,
    PowerRate,
    GridRate,
}

impl Audit {
    pub const ALL: [Audit; 5] = [
        Audit::SquareRate,
        Audit::PolyReluRate,
        Audit::PolyReluNet,
        Audit::PowerRate,
        Audit::GridRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Audit::SquareRate => "square-rate",
            Audit::PolyReluRate => "polyrelu-rate",
            Audit::PolyReluNet => "polyrelu-net",
            Audit::PowerRate => "power-rate",
            Audit::GridRate => "grid-rate",
        }
    }

    /// Name of the first CSV column.
    pub fn param_name(self) -> &'static str {
        match self {
            Audit::PowerRate => "n",
            _ => "eps",
        }
    }

    pub fn default_eps(self, dim: usize) -> Vec<f64> {
        match (self, dim) {
            (Audit::PolyReluNet, _) => vec![0.1, 0.05, 0.01],
            (Audit::GridRate, 1) => vec![1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9],
            (Audit::GridRate, _) => vec![1e-1, 1e-2, 1e-3, 1e-4],
            _ => vec![1e-1, 1e-2, 1e-3, 1e-4],
        }
    }
}

impl fmt::Display for Audit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Audit {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Audit::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| NetError::UnknownAudit(s.to_string()))
    }
}

/// Knobs shared by the audits; unused fields are ignored.
#[derive(Debug, Clone, Serialize)]
pub struct AuditOptions {
    pub eps: Vec<f64>,
    /// PolyReLU coefficients for `polyrelu-rate`.
    pub coeffs: Vec<f64>,
    /// Input dimension for `grid-rate`.
    pub dim: usize,
    /// Smoothness for `grid-rate`, activation order for `power-rate`.
    pub order: usize,
    /// Largest exponent for `power-rate`.
    pub max_n: u32,
    pub seed: u64,
}

impl AuditOptions {
    pub fn defaults(audit: Audit) -> Self {
        Self {
            eps: audit.default_eps(1),
            coeffs: vec![0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            dim: 1,
            order: 3,
            max_n: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub param: f64,
    pub size: usize,
    pub depth: usize,
    pub params: usize,
    pub measured_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditTable {
    pub audit: String,
    pub param_name: String,
    pub rows: Vec<AuditRow>,
}

impl AuditTable {
    pub fn header(&self) -> String {
        format!("{},size,depth,params,measured_error", self.param_name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header();
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{},{:e}\n", r.param, r.size, r.depth, r.params, r.measured_error));
        }
        s
    }
}

fn row(param: f64, net: &LayeredNet, err: f64) -> AuditRow {
    AuditRow {
        param,
        size: net.size(),
        depth: net.depth(),
        params: net.params(),
        measured_error: err,
    }
}

fn grid_points(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

/// `sin(pi x) / pi^3`: every derivative of order at most 3 is bounded by 1.
pub fn scaled_sine(x: &[f64], a: &[usize]) -> f64 {
    let t = PI * x[0];
    let base = match a[0] % 4 {
        0 => t.sin(),
        1 => t.cos(),
        2 => -t.sin(),
        _ => -t.cos(),
    };
    base * PI.powi(a[0] as i32 - 3)
}

/// Product `sin(pi x) sin(pi y) / pi^3` with derivatives bounded by 1 up to total order 3.
pub fn scaled_sine_2d(x: &[f64], a: &[usize]) -> f64 {
    scaled_sine(&x[..1], &a[..1]) * scaled_sine(&x[1..], &a[1..]) * PI.powi(3)
}

fn check_eps_list(eps: &[f64]) -> Result<(), NetError> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(NetError::Invalid("eps list must be non-empty with values in (0, 1)".into()));
    }
    Ok(())
}

pub fn run_audit(audit: Audit, opts: &AuditOptions) -> Result<AuditTable, NetError> {
    let rows = match audit {
        Audit::SquareRate => square_rate(&opts.eps)?,
        Audit::PolyReluRate => polyrelu_rate(&opts.coeffs, &opts.eps)?,
        Audit::PolyReluNet => polyrelu_net_audit(&opts.eps, opts.seed)?,
        Audit::PowerRate => power_rate(opts.max_n, opts.order)?,
        Audit::GridRate => grid_rate(opts.dim, opts.order, &opts.eps)?,
    };
    Ok(AuditTable {
        audit: audit.name().into(),
        param_name: audit.param_name().into(),
        rows,
    })
}

/// Sup error of the sawtooth square on a `10^4`-interval grid of `[0, 1]`.
pub fn square_rate(eps: &[f64]) -> Result<Vec<AuditRow>, NetError> {
    check_eps_list(eps)?;
    eps.iter()
        .map(|&e| {
            let net = relu_approx_square(e)?;
            let err = grid_points(10_000, 0.0, 1.0)
                .map(|x| (net.eval1(x) - x * x).abs())
                .fold(0.0, f64::max);
            Ok(row(e, &net, err))
        })
        .collect()
}

pub fn polyrelu_rate(c: &[f64], eps: &[f64]) -> Result<Vec<AuditRow>, NetError> {
    check_eps_list(eps)?;
    let target = Act::PolyRelu(c.to_vec());
    eps.iter()
        .map(|&e| {
            let net = relu_approx_polyrelu(c, e)?;
            let err = grid_points(10_000, -1.0, 1.0)
                .map(|x| (net.eval1(x) - target.apply(x)).abs())
                .fold(0.0, f64::max);
            Ok(row(e, &net, err))
        })
        .collect()
}

/// Random normalized PolyReLU net with input dim 2 and two width-4 layers,
/// converted at each tolerance; error is the worst output deviation over
/// `10^4` uniform inputs.
pub fn polyrelu_net_audit(eps: &[f64], seed: u64) -> Result<Vec<AuditRow>, NetError> {
    check_eps_list(eps)?;
    let net = random_normalized_polyrelu_net(2, &[4, 4], 3, seed);
    let alpha = net
        .layers()
        .iter()
        .flat_map(|l| &l.acts)
        .map(|a| match a {
            Act::PolyRelu(c) => polyrelu_lipschitz(c),
            _ => 0.0,
        })
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let inputs: Vec<[f64; 2]> = (0..10_000)
        .map(|_| [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)])
        .collect();
    let want: Vec<Vec<f64>> = inputs.iter().map(|x| net.eval(x).expect("dim 2")).collect();
    eps.iter()
        .map(|&e| {
            let relu = relu_approx_polyrelu_net(&net, e, alpha)?;
            let mut err: f64 = 0.0;
            for (x, w) in inputs.iter().zip(&want) {
                for (a, b) in relu.eval(x)?.iter().zip(w) {
                    err = err.max((a - b).abs());
                }
            }
            Ok(row(e, &relu, err))
        })
        .collect()
}

/// Worst relative error of `power_net(n, r)` under exact rational
/// evaluation at 100 points of `[-1, 1]` (0 excluded).
pub fn power_rate(max_n: u32, r: usize) -> Result<Vec<AuditRow>, NetError> {
    let xs: Vec<BigRational> = (0..100)
        .map(|i| BigRational::from_f64(-1.0 + (2 * i + 1) as f64 / 100.0))
        .collect();
    (1..=max_n)
        .map(|n| {
            let net = power_net(n, r)?;
            let mut err = 0.0f64;
            for x in &xs {
                let got = net.eval(std::slice::from_ref(x))?.swap_remove(0);
                let want = num_traits::pow(x.clone(), n as usize);
                let rel = if want.is_zero() {
                    got.abs()
                } else {
                    ((got - &want) / want).abs()
                };
                err = err.max(rel.to_f64().unwrap_or(f64::INFINITY));
            }
            Ok(row(n as f64, &net, err))
        })
        .collect()
}

/// Grid approximator at the resolution `N(eps)` for the scaled sine in
/// `d` dimensions. Size is that of the PolyReLU realization; error is
/// measured on `10^4` points.
pub fn grid_rate(d: usize, n: usize, eps: &[f64]) -> Result<Vec<AuditRow>, NetError> {
    check_eps_list(eps)?;
    let (oracle, target): (&dyn Fn(&[f64], &[usize]) -> f64, fn(&[f64]) -> f64) = match d {
        1 => (&scaled_sine, |x| scaled_sine(x, &[0])),
        2 => (&scaled_sine_2d, |x| scaled_sine_2d(x, &[0, 0])),
        _ => return Err(NetError::Invalid(format!("grid-rate supports d in {{1, 2}}, got {d}"))),
    };
    eps.iter()
        .map(|&e| {
            let big_n = resolution_for(e, d, n);
            let g = GridApproximator::build(oracle, d, n, big_n)?;
            let net = g.to_net();
            let pts: Vec<Vec<f64>> = if d == 1 {
                grid_points(10_000, -1.0, 1.0).map(|x| vec![x]).collect()
            } else {
                let side: Vec<f64> = grid_points(99, -1.0, 1.0).collect();
                side.iter().flat_map(|&a| side.iter().map(move |&b| vec![a, b])).collect()
            };
            let err = pts
                .iter()
                .map(|x| Ok((g.eval(x)? - target(x)).abs()))
                .collect::<Result<Vec<f64>, NetError>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(row(e, &net, err))
        })
        .collect()
}

/// Least-squares slope of `ln(size)` against `ln(eps)`.
pub fn loglog_slope(rows: &[AuditRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.param.ln(), (r.size as f64).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Envelope constant `c` fitted at the loosest tolerance: `size / ln^2(1/eps)`.
/// Returns `c` and whether every row satisfies `size <= c ln^2(1/eps)`.
pub fn ln2_envelope(rows: &[AuditRow]) -> (f64, bool) {
    let first = rows
        .iter()
        .max_by(|a, b| a.param.total_cmp(&b.param))
        .expect("non-empty");
    let c = first.size as f64 / (1.0 / first.param).ln().powi(2);
    let ok = rows.iter().all(|r| r.size as f64 <= c * (1.0 / r.param).ln().powi(2) + 1e-9);
    (c, ok)
}
