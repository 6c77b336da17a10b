//! Closed-form FLOPs and activation-memory accounting for one FFN, relative
//! to the `24 B S H²` cost of its matrix multiplications.
//!
//! Counts assume a 3rd-order PolyCom, roughly 10 FLOPs for each `tanh`/`exp`,
//! and 2-byte (BF16) stored elements. Gradient checkpointing drops the stored
//! activations and pays for the activation twice.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Exact rational arithmetic for cost figures.
pub type Exact = Ratio<i128>;

/// Bytes per stored element.
pub const BYTES_PER_ELEMENT: i128 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostKind {
    #[serde(rename = "ReLU")]
    Relu,
    #[serde(rename = "GELU")]
    Gelu,
    #[serde(rename = "SwiGLU")]
    SwiGlu,
    #[serde(rename = "ReLU2")]
    ReluSquared,
    PolyNorm,
    PolyReLU,
}

impl CostKind {
    /// Table order.
    pub const ALL: [CostKind; 6] = [
        Self::Relu,
        Self::Gelu,
        Self::SwiGlu,
        Self::ReluSquared,
        Self::PolyNorm,
        Self::PolyReLU,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Relu => "ReLU",
            Self::Gelu => "GELU",
            Self::SwiGlu => "SwiGLU",
            Self::ReluSquared => "ReLU2",
            Self::PolyNorm => "PolyNorm",
            Self::PolyReLU => "PolyReLU",
        }
    }

    /// `(intermediate / H, activation FLOPs / BSH, stored elements / BSH)`
    /// without checkpointing.
    fn coefficients(self) -> (Exact, Exact, Exact) {
        let r = |n: i128, d: i128| Exact::new(n, d);
        match self {
            Self::Relu => (r(4, 1), r(4, 1), r(4, 1)),
            Self::Gelu => (r(4, 1), r(72, 1), r(10, 1)),
            Self::SwiGlu => (r(8, 3), r(112, 3), r(8, 1)),
            Self::ReluSquared => (r(4, 1), r(8, 1), r(8, 1)),
            Self::PolyNorm => (r(4, 1), r(72, 1), r(12, 1)),
            Self::PolyReLU => (r(4, 1), r(40, 1), r(8, 1)),
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostKind {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == lower)
            .or(match lower.as_str() {
                "relu^2" | "relu_squared" => Some(Self::ReluSquared),
                _ => None,
            })
            .ok_or_else(|| AnalysisError::UnknownCostKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub kind: CostKind,
    pub batch: u64,
    pub seq: u64,
    pub hidden: u64,
    pub checkpointing: bool,
    /// Intermediate size in units of `H`.
    pub intermediate: Exact,
    /// Activation FLOPs in units of `B S H`.
    pub flops_coef: Exact,
    /// Activation FLOPs for the given `B, S, H`.
    pub flops_activation: Exact,
    /// `flops_activation / (24 B S H²)`.
    pub flops_ratio: Exact,
    /// Stored activation elements in units of `B S H`.
    pub memory_coef: Exact,
    pub memory_overhead_bytes: i128,
}

/// Cost of one FFN activation at batch `b`, sequence `s`, hidden size `h`.
pub fn activation_cost(kind: CostKind, b: u64, s: u64, h: u64, checkpointing: bool) -> Result<CostReport, AnalysisError> {
    if b == 0 || s == 0 || h == 0 {
        return Err(AnalysisError::Invalid("B, S and H must be positive".into()));
    }
    let (intermediate, mut flops_coef, mut memory_coef) = kind.coefficients();
    if checkpointing {
        flops_coef *= Exact::from_integer(2);
        memory_coef = Exact::from_integer(0);
    }
    let bsh = i128::from(b) * i128::from(s) * i128::from(h);
    let flops_activation = flops_coef * Exact::from_integer(bsh);
    let flops_ratio = flops_coef / Exact::from_integer(24 * i128::from(h));
    let bytes = memory_coef * Exact::from_integer(bsh * BYTES_PER_ELEMENT);
    Ok(CostReport {
        kind,
        batch: b,
        seq: s,
        hidden: h,
        checkpointing,
        intermediate,
        flops_coef,
        flops_activation,
        flops_ratio,
        memory_coef,
        memory_overhead_bytes: bytes.to_integer(),
    })
}

fn coef_text(c: &Exact, unit: &str) -> String {
    if c.is_integer() {
        format!("{}{unit}", c.numer())
    } else {
        format!("{}/{}{unit}", c.numer(), c.denom())
    }
}

/// `x/(yH)` style rendering of a value `c / H`.
fn per_h_text(c: &Exact) -> String {
    if c.is_integer() {
        format!("{}/H", c.numer())
    } else {
        format!("{}/({}H)", c.numer(), c.denom())
    }
}

/// Round a positive value to two significant figures.
pub fn two_sig_figs(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let decimals = (1 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

impl CostReport {
    /// `4H`, `8/3H`
    pub fn intermediate_text(&self) -> String {
        coef_text(&self.intermediate, "H")
    }

    /// `72BSH`, `112/3BSH`
    pub fn flops_text(&self) -> String {
        coef_text(&self.flops_coef, "BSH")
    }

    /// The ratio with the `H` left symbolic, e.g. `14/(9H)`.
    pub fn ratio_text(&self) -> String {
        per_h_text(&(self.flops_ratio * Exact::from_integer(i128::from(self.hidden))))
    }

    pub fn ratio_percent(&self) -> f64 {
        let r = self.flops_ratio;
        100.0 * (*r.numer() as f64) / (*r.denom() as f64)
    }

    /// Percentage to two significant figures, e.g. `0.29%`.
    pub fn ratio_percent_text(&self) -> String {
        format!("{}%", two_sig_figs(self.ratio_percent()))
    }

    /// `12BSH`, or `0` with checkpointing.
    pub fn memory_text(&self) -> String {
        if *self.memory_coef.numer() == 0 {
            "0".into()
        } else {
            coef_text(&self.memory_coef, "BSH")
        }
    }

    /// Memory in MiB (the tables' "MB").
    pub fn memory_mib(&self) -> Exact {
        Exact::new(self.memory_overhead_bytes, 1 << 20)
    }
}

/// Every row of both tables: no checkpointing first, then checkpointing.
pub fn cost_table(b: u64, s: u64, h: u64) -> Result<Vec<CostReport>, AnalysisError> {
    let mut out = Vec::with_capacity(12);
    for ckpt in [false, true] {
        for kind in CostKind::ALL {
            out.push(activation_cost(kind, b, s, h, ckpt)?);
        }
    }
    Ok(out)
}
