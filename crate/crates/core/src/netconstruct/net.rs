use std::ops::{Add, Mul, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NetError;

/// Number type a [`LayeredNet`] can be evaluated in.
pub trait Scalar: Clone + Zero + One + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn from_f64(v: f64) -> Self;

    fn relu(&self) -> Self {
        if *self > Self::zero() {
            self.clone()
        } else {
            Self::zero()
        }
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn relu(&self) -> Self {
        self.max(0.0)
    }
}

/// Exact evaluation; every finite `f64` weight is a dyadic rational.
impl Scalar for BigRational {
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite weight")
    }
}

/// Per-neuron activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Act {
    Identity,
    Relu,
    /// `sum_i a_i max(z, 0)^i`, coefficients `a_0..a_r`.
    #[serde(rename = "polyrelu")]
    PolyRelu(Vec<f64>),
}

impl Act {
    /// PolyReLU with a unit coefficient on `ReLU^power`, padded to `order`.
    pub fn poly_monomial(power: usize, order: usize) -> Self {
        let mut c = vec![0.0; order.max(power).max(1) + 1];
        c[power] = 1.0;
        Act::PolyRelu(c)
    }

    pub fn apply<T: Scalar>(&self, z: T) -> T {
        match self {
            Act::Identity => z,
            Act::Relu => z.relu(),
            Act::PolyRelu(c) => {
                let t = z.relu();
                c.iter()
                    .rev()
                    .fold(T::zero(), |acc, &a| acc * t.clone() + T::from_f64(a))
            }
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Act::Identity => "identity",
            Act::Relu => "relu",
            Act::PolyRelu(_) => "polyrelu",
        }
    }
}

/// Sparse row of `(input index, weight)` pairs.
pub type Row = Vec<(usize, f64)>;

/// One affine map followed by per-neuron activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rows: Vec<Row>,
    pub bias: Vec<f64>,
    pub acts: Vec<Act>,
}

impl Layer {
    pub fn new(rows: Vec<Row>, bias: Vec<f64>, acts: Vec<Act>) -> Self {
        Self { rows, bias, acts }
    }

    /// Identity-activated layer.
    pub fn affine(rows: Vec<Row>, bias: Vec<f64>) -> Self {
        let acts = vec![Act::Identity; rows.len()];
        Self { rows, bias, acts }
    }

    pub fn width(&self) -> usize {
        self.rows.len()
    }

    pub fn is_affine(&self) -> bool {
        self.acts.iter().all(|a| *a == Act::Identity)
    }

    fn forward<T: Scalar>(&self, h: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .zip(&self.bias)
            .zip(&self.acts)
            .map(|((row, &b), act)| {
                let z = row
                    .iter()
                    .fold(T::from_f64(b), |acc, &(j, w)| acc + T::from_f64(w) * h[j].clone());
                act.apply(z)
            })
            .collect()
    }
}

/// Feed-forward network as an explicit list of layers; the outputs are the
/// last layer's activations.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredNet {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl LayeredNet {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self, NetError> {
        if input_dim == 0 || layers.is_empty() {
            return Err(NetError::Invalid("a net needs inputs and at least one layer".into()));
        }
        let mut width = input_dim;
        for (l, layer) in layers.iter().enumerate() {
            let n = layer.rows.len();
            if n == 0 || layer.bias.len() != n || layer.acts.len() != n {
                return Err(NetError::Invalid(format!(
                    "layer {l}: {n} rows, {} biases, {} activations",
                    layer.bias.len(),
                    layer.acts.len()
                )));
            }
            for row in &layer.rows {
                if let Some(&(j, _)) = row.iter().find(|(j, _)| *j >= width) {
                    return Err(NetError::Invalid(format!(
                        "layer {l}: input index {j} out of range for width {width}"
                    )));
                }
            }
            width = n;
        }
        Ok(Self { input_dim, layers })
    }

    /// Build from dense `(weights, bias, activations)` layers; zero weights
    /// are dropped.
    pub fn from_dense(input_dim: usize, layers: Vec<(Vec<Vec<f64>>, Vec<f64>, Vec<Act>)>) -> Result<Self, NetError> {
        let layers = layers
            .into_iter()
            .map(|(w, b, a)| {
                let rows = w
                    .into_iter()
                    .map(|r| r.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect())
                    .collect();
                Layer::new(rows, b, a)
            })
            .collect();
        Self::new(input_dim, layers)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::width)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Total neuron count.
    pub fn size(&self) -> usize {
        self.layers.iter().map(Layer::width).sum()
    }

    /// Stored weights plus biases.
    pub fn params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.rows.iter().map(Vec::len).sum::<usize>() + l.bias.len())
            .sum()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// True when every hidden neuron uses `pred` and the output layer is
    /// either affine or also uses `pred`.
    pub fn hidden_acts_all(&self, pred: impl Fn(&Act) -> bool) -> bool {
        let (last, hidden) = self.layers.split_last().expect("non-empty");
        hidden.iter().all(|l| l.acts.iter().all(&pred)) && (last.is_affine() || last.acts.iter().all(&pred))
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>, NetError> {
        if x.len() != self.input_dim {
            return Err(NetError::InputDim {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.forward(&h);
        }
        Ok(h)
    }

    /// Evaluate a single-output net at a scalar input.
    pub fn eval1(&self, x: f64) -> f64 {
        self.eval(&[x]).expect("scalar input")[0]
    }

    /// Exact rational evaluation of a single-input, single-output net.
    pub fn eval1_exact(&self, x: f64) -> BigRational {
        self.eval(&[BigRational::from_f64(x)]).expect("scalar input").swap_remove(0)
    }
}

/// Random dense net with ReLU hidden layers and a single affine output,
/// weights uniform in `[-1, 1]`.
pub fn random_relu_net(input_dim: usize, hidden: &[usize], seed: u64) -> LayeredNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::new();
    let mut width = input_dim;
    let widths: Vec<(usize, bool)> = hidden.iter().map(|&w| (w, true)).chain([(1, false)]).collect();
    for (w, is_hidden) in widths {
        let rows: Vec<Vec<f64>> = (0..w)
            .map(|_| (0..width).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let bias: Vec<f64> = (0..w).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let act = if is_hidden { Act::Relu } else { Act::Identity };
        layers.push((rows, bias, vec![act; w]));
        width = w;
    }
    LayeredNet::from_dense(input_dim, layers).expect("consistent dims")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_by_hand() {
        // relu(x - y) + 2 relu(y)
        let net = LayeredNet::from_dense(
            2,
            vec![
                (vec![vec![1.0, -1.0], vec![0.0, 1.0]], vec![0.0, 0.0], vec![Act::Relu, Act::Relu]),
                (vec![vec![1.0, 2.0]], vec![0.0], vec![Act::Identity]),
            ],
        )
        .unwrap();
        assert_eq!(net.eval(&[3.0, 1.0]).unwrap(), vec![4.0]);
        assert_eq!(net.eval(&[-1.0, 2.0]).unwrap(), vec![4.0]);
        assert_eq!((net.size(), net.depth(), net.params()), (3, 2, 5 + 3));
        assert!(net.eval(&[1.0]).is_err());
    }

    #[test]
    fn polyrelu_act() {
        let a = Act::PolyRelu(vec![0.5, 1.0, 2.0]);
        assert_eq!(a.apply(2.0), 0.5 + 2.0 + 8.0);
        assert_eq!(a.apply(-3.0), 0.5);
        assert_eq!(Act::poly_monomial(1, 3), Act::PolyRelu(vec![0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn exact_and_float_agree_on_simple_net() {
        use num_traits::Signed;
        let net = random_relu_net(1, &[4, 4], 9);
        for x in [-0.75, 0.0, 0.3] {
            let exact = net.eval1_exact(x);
            let approx = net.eval1(x);
            let diff = (exact - BigRational::from_f64(approx)).abs();
            assert!(diff < BigRational::from_f64(1e-12));
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let bad = Layer::new(vec![vec![(3, 1.0)]], vec![0.0], vec![Act::Relu]);
        assert!(LayeredNet::new(2, vec![bad]).is_err());
        assert!(LayeredNet::new(2, vec![]).is_err());
    }
}
