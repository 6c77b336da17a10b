//! Layer-by-layer assembly of nets from linear expressions over the current
//! frontier.

use super::net::{Act, Layer, LayeredNet, Row};

/// Which nonlinearity hidden neurons use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Relu,
    PolyRelu { order: usize },
}

impl Family {
    /// Activation that acts as `max(z, 0)`.
    pub fn unit(self) -> Act {
        match self {
            Family::Relu => Act::Relu,
            Family::PolyRelu { order } => Act::poly_monomial(1, order),
        }
    }
}

/// Affine combination of frontier neurons.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Expr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Expr {
    pub fn var(i: usize) -> Self {
        Self {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(i, w)| (i, w * s)).collect(),
            constant: self.constant * s,
        }
    }

    pub fn plus(&self, other: &Expr) -> Self {
        self.axpy(1.0, other)
    }

    pub fn minus(&self, other: &Expr) -> Self {
        self.axpy(-1.0, other)
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Expr) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|&(i, w)| (i, w * s)));
        Self {
            terms,
            constant: self.constant + s * other.constant,
        }
        .normalized()
    }

    pub fn shift(&self, c: f64) -> Self {
        Self {
            terms: self.terms.clone(),
            constant: self.constant + c,
        }
    }

    fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (i, w) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => out.push((i, w)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
        self
    }

    fn into_row(self) -> (Row, f64) {
        let e = self.normalized();
        (e.terms, e.constant)
    }
}

/// Neurons of the layer under construction.
#[derive(Debug, Default)]
pub struct Plan {
    neurons: Vec<(Expr, Act)>,
}

impl Plan {
    pub fn push(&mut self, e: Expr, act: Act) -> usize {
        self.neurons.push((e, act));
        self.neurons.len() - 1
    }

    /// Two neurons `act(z)` and `act(-z)`.
    pub fn pair(&mut self, e: &Expr, act: Act) -> (usize, usize) {
        let p = self.push(e.clone(), act.clone());
        let q = self.push(e.scale(-1.0), act);
        (p, q)
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }
}

/// Value carried across a layer as the difference `unit(z) - unit(-z)`.
pub struct Carry(usize, usize);

impl Carry {
    pub fn push(plan: &mut Plan, e: &Expr, fam: Family) -> Self {
        let (p, q) = plan.pair(e, fam.unit());
        Carry(p, q)
    }

    pub fn value(&self, out: &[Expr]) -> Expr {
        out[self.0].minus(&out[self.1])
    }
}

pub struct Builder {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Builder {
    pub fn new(input_dim: usize) -> (Self, Vec<Expr>) {
        let inputs = (0..input_dim).map(Expr::var).collect();
        (
            Self {
                input_dim,
                layers: Vec::new(),
            },
            inputs,
        )
    }

    /// Append a layer; returns one expression per new neuron.
    pub fn layer(&mut self, plan: Plan) -> Vec<Expr> {
        let n = plan.neurons.len();
        let mut rows = Vec::with_capacity(n);
        let mut bias = Vec::with_capacity(n);
        let mut acts = Vec::with_capacity(n);
        for (e, a) in plan.neurons {
            let (r, b) = e.into_row();
            rows.push(r);
            bias.push(b);
            acts.push(a);
        }
        self.layers.push(Layer::new(rows, bias, acts));
        (0..n).map(Expr::var).collect()
    }

    /// Close with an affine output layer.
    pub fn finish(mut self, outputs: Vec<Expr>) -> LayeredNet {
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        for e in outputs {
            let (r, b) = e.into_row();
            rows.push(r);
            bias.push(b);
        }
        self.layers.push(Layer::affine(rows, bias));
        LayeredNet::new(self.input_dim, self.layers).expect("builder keeps dims consistent")
    }
}
