//! Activation zoo: PolyReLU and PolyNorm with learnable coefficients, plus the
//! baselines they are compared against (ReLU, ReLU², GELU, SiLU, SwiGLU).
//!
//! PolyNorm follows the reference implementation and normalizes each power
//! by its root-mean-square over the trailing axis, `v / sqrt(mean(v²) + eps)`.
//! Written with an L2 norm instead, each term differs by the constant factor
//! `sqrt(d)`, which the learnable coefficients absorb.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{Tape, Tensor, TensorError, Var};

/// Default PolyNorm stabilizer.
pub const POLYNORM_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActivationError {
    #[error("polynomial order must be at least 1")]
    ZeroOrder,
    #[error("coefficient vector must hold order + 1 >= 2 entries, got {0}")]
    TooFewCoeffs(usize),
    #[error("normalization eps must be positive, got {0}")]
    BadEps(f64),
    #[error("unknown activation `{0}` (expected relu, relu2, gelu, silu, swiglu, polyrelu, polynorm)")]
    UnknownKind(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    #[serde(rename = "relu2")]
    ReluSquared,
    Gelu,
    Silu,
    #[serde(rename = "swiglu")]
    SwiGlu,
    #[serde(rename = "polyrelu")]
    PolyRelu,
    #[serde(rename = "polynorm")]
    PolyNorm,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 7] = [
        Self::Relu,
        Self::ReluSquared,
        Self::Gelu,
        Self::Silu,
        Self::SwiGlu,
        Self::PolyRelu,
        Self::PolyNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Relu => "relu",
            Self::ReluSquared => "relu2",
            Self::Gelu => "gelu",
            Self::Silu => "silu",
            Self::SwiGlu => "swiglu",
            Self::PolyRelu => "polyrelu",
            Self::PolyNorm => "polynorm",
        }
    }

    pub fn has_coeffs(self) -> bool {
        matches!(self, Self::PolyRelu | Self::PolyNorm)
    }

    pub fn is_gated(self) -> bool {
        self == Self::SwiGlu
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = ActivationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .or(match lower.as_str() {
                "relu^2" | "relu_squared" | "squared_relu" => Some(Self::ReluSquared),
                _ => None,
            })
            .ok_or_else(|| ActivationError::UnknownKind(s.to_string()))
    }
}

/// Coefficients `a_0..a_r` of an order-`r` polynomial composition, plus the
/// PolyNorm stabilizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyCoeffs {
    coeffs: Vec<f64>,
    eps: f64,
}

impl PolyCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, ActivationError> {
        if coeffs.len() < 2 {
            return Err(ActivationError::TooFewCoeffs(coeffs.len()));
        }
        Ok(Self {
            coeffs,
            eps: POLYNORM_EPS,
        })
    }

    /// Standard initialization: `a_0 = 0`, `a_i = 1/r`.
    pub fn init(order: usize) -> Result<Self, ActivationError> {
        if order == 0 {
            return Err(ActivationError::ZeroOrder);
        }
        let mut coeffs = vec![1.0 / order as f64; order + 1];
        coeffs[0] = 0.0;
        Self::new(coeffs)
    }

    /// Unit coefficient on `ReLU^power` and zero elsewhere, at the given order.
    pub fn monomial(order: usize, power: usize) -> Result<Self, ActivationError> {
        if order == 0 {
            return Err(ActivationError::ZeroOrder);
        }
        let mut coeffs = vec![0.0; order.max(power) + 1];
        coeffs[power] = 1.0;
        Self::new(coeffs)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self, ActivationError> {
        // eps = 0 is allowed for analytic checks of scale invariance
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(ActivationError::BadEps(eps));
        }
        self.eps = eps;
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_vec(self.coeffs.clone())
    }

    /// `sum_i a_i max(x, 0)^i` with `max(x,0)^0 = 1`.
    pub fn polyrelu(&self, x: f64) -> f64 {
        eval_poly(&self.coeffs, x.max(0.0))
    }

    /// `sum_i i a_i max(x,0)^(i-1)` for `x > 0`, zero for `x <= 0`.
    pub fn polyrelu_derivative(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, a)| i as f64 * a * x.powi(i as i32 - 1))
            .sum()
    }

    /// PolyNorm of a single feature vector.
    pub fn polynorm(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len() as f64;
        let mut out = vec![self.coeffs[0]; x.len()];
        for (i, a) in self.coeffs.iter().enumerate().skip(1) {
            let p: Vec<f64> = x.iter().map(|v| v.powi(i as i32)).collect();
            let ms = p.iter().map(|v| v * v).sum::<f64>() / d;
            let r = 1.0 / (ms + self.eps).sqrt();
            for (o, v) in out.iter_mut().zip(&p) {
                *o += a * v * r;
            }
        }
        out
    }
}

/// Horner evaluation of `sum_i c_i t^i`.
pub fn eval_poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Tagged activation choice. Coefficients are present exactly for the
/// polynomial kinds; SwiGLU's second projection lives with the FFN weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub coeffs: Option<PolyCoeffs>,
}

impl ActivationSpec {
    /// Spec with coefficients initialized at `order` when the kind needs them.
    pub fn new(kind: ActivationKind, order: usize) -> Result<Self, ActivationError> {
        let coeffs = if kind.has_coeffs() {
            Some(PolyCoeffs::init(order)?)
        } else {
            None
        };
        Ok(Self { kind, coeffs })
    }

    pub fn with_coeffs(kind: ActivationKind, coeffs: PolyCoeffs) -> Self {
        assert!(kind.has_coeffs(), "{kind} takes no coefficients");
        Self {
            kind,
            coeffs: Some(coeffs),
        }
    }

    pub fn simple(kind: ActivationKind) -> Self {
        assert!(!kind.has_coeffs(), "{kind} needs coefficients");
        Self { kind, coeffs: None }
    }
}

/// PolyReLU on the tape; `coeffs` is a `[r+1]` vector, shared by every element.
pub fn polyrelu<'t>(x: &Var<'t>, coeffs: &Var<'t>) -> Result<Var<'t>, TensorError> {
    let n = coeffs.value().numel();
    let y = x.relu()?;
    let mut out = y.mul(&coeffs.index(1)?)?;
    for i in 2..n {
        out = out.add(&y.powi(i as i32)?.mul(&coeffs.index(i)?)?)?;
    }
    out.add(&coeffs.index(0)?)
}

/// PolyNorm on the tape, normalizing along the trailing axis.
pub fn polynorm<'t>(x: &Var<'t>, coeffs: &Var<'t>, eps: f64) -> Result<Var<'t>, TensorError> {
    let n = coeffs.value().numel();
    let mut out = x.rms_normalize(eps)?.mul(&coeffs.index(1)?)?;
    for i in 2..n {
        let term = x.powi(i as i32)?.rms_normalize(eps)?.mul(&coeffs.index(i)?)?;
        out = out.add(&term)?;
    }
    out.add(&coeffs.index(0)?)
}

/// `SiLU(gate) * up`.
pub fn swiglu<'t>(gate: &Var<'t>, up: &Var<'t>) -> Result<Var<'t>, TensorError> {
    gate.silu()?.mul(up)
}

/// Elementwise baselines. SwiGLU is not elementwise; use [`swiglu`].
pub fn baseline<'t>(x: &Var<'t>, kind: ActivationKind) -> Result<Var<'t>, TensorError> {
    match kind {
        ActivationKind::Relu => x.relu(),
        ActivationKind::ReluSquared => x.relu()?.powi(2),
        ActivationKind::Gelu => x.gelu(),
        ActivationKind::Silu => x.silu(),
        other => Err(TensorError::Invalid(format!(
            "{other} is not an elementwise baseline"
        ))),
    }
}

/// Evaluate PolyReLU on a plain tensor.
pub fn polyrelu_tensor(x: &Tensor, c: &PolyCoeffs) -> Result<Tensor, TensorError> {
    let tape = Tape::new();
    let out = polyrelu(&tape.constant(x.clone()), &tape.constant(c.to_tensor()))?;
    Ok((*out.value()).clone())
}

/// Evaluate PolyNorm on a plain tensor (trailing axis is the feature axis).
pub fn polynorm_tensor(x: &Tensor, c: &PolyCoeffs) -> Result<Tensor, TensorError> {
    let tape = Tape::new();
    let out = polynorm(&tape.constant(x.clone()), &tape.constant(c.to_tensor()), c.eps())?;
    Ok((*out.value()).clone())
}

/// Evaluate an elementwise baseline on a plain tensor.
pub fn baseline_tensor(x: &Tensor, kind: ActivationKind) -> Result<Tensor, TensorError> {
    let tape = Tape::new();
    Ok((*baseline(&tape.constant(x.clone()), kind)?.value()).clone())
}

/// Evaluate SwiGLU on already-projected streams.
pub fn swiglu_tensor(gate: &Tensor, up: &Tensor) -> Result<Tensor, TensorError> {
    let tape = Tape::new();
    Ok((*swiglu(&tape.constant(gate.clone()), &tape.constant(up.clone()))?.value()).clone())
}
