use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{TransformerConfig, TransformerError};
use crate::activations::{self, ActivationKind, ActivationSpec, PolyCoeffs, POLYNORM_EPS};
use crate::tensor::{Tape, Tensor, TensorError, Var};

/// How a parameter is treated by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamRole {
    Embedding,
    Matrix,
    /// RMSNorm gains.
    Gain,
    /// Activation coefficients; never weight-decayed.
    PolyCoeffs,
}

impl ParamRole {
    pub fn decays(self) -> bool {
        matches!(self, Self::Embedding | Self::Matrix)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub role: ParamRole,
    pub value: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
struct LayerSlots {
    attn_norm: usize,
    wq: usize,
    wk: usize,
    wv: usize,
    wo: usize,
    ffn_norm: usize,
    w1: usize,
    w2: usize,
    w3: Option<usize>,
    coeffs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    tok_emb: usize,
    pos_emb: usize,
    layers: Vec<LayerSlots>,
    final_norm: usize,
    head: usize,
}

/// Feed-forward weights bound to a tape.
#[derive(Debug, Clone, Copy)]
pub struct FfnVars<'t> {
    /// `[H, I]` up projection (the gate for SwiGLU).
    pub w1: Var<'t>,
    /// `[I, H]` down projection.
    pub w2: Var<'t>,
    /// `[H, I]` linear stream of SwiGLU.
    pub w3: Option<Var<'t>>,
    /// `[r + 1]` activation coefficients.
    pub coeffs: Option<Var<'t>>,
    /// PolyNorm stabilizer.
    pub poly_eps: f64,
}

/// `rho(x W1) W2`, `(SiLU(x W1) * x W3) W2` for SwiGLU. PolyNorm normalizes
/// over the intermediate axis.
pub fn ffn_forward<'t>(x: &Var<'t>, w: &FfnVars<'t>, kind: ActivationKind) -> Result<Var<'t>, TransformerError> {
    let up = x.matmul(&w.w1)?;
    let need = |v: Option<Var<'t>>, what: &str| {
        v.ok_or_else(|| TransformerError::Config(format!("{kind} FFN needs {what}")))
    };
    let act = match kind {
        ActivationKind::SwiGlu => {
            let lin = x.matmul(&need(w.w3, "a second projection")?)?;
            activations::swiglu(&up, &lin)?
        }
        ActivationKind::PolyRelu => activations::polyrelu(&up, &need(w.coeffs, "coefficients")?)?,
        ActivationKind::PolyNorm => {
            activations::polynorm(&up, &need(w.coeffs, "coefficients")?, w.poly_eps)?
        }
        other => activations::baseline(&up, other)?,
    };
    Ok(act.matmul(&w.w2)?)
}

/// Plain-tensor FFN evaluation with explicit weights.
pub fn ffn_forward_tensor(
    x: &Tensor,
    w1: &Tensor,
    w2: &Tensor,
    w3: Option<&Tensor>,
    spec: &ActivationSpec,
) -> Result<Tensor, TransformerError> {
    let tape = Tape::new();
    let vars = FfnVars {
        w1: tape.constant(w1.clone()),
        w2: tape.constant(w2.clone()),
        w3: w3.map(|w| tape.constant(w.clone())),
        coeffs: spec.coeffs.as_ref().map(|c| tape.constant(c.to_tensor())),
        poly_eps: spec.coeffs.as_ref().map_or(POLYNORM_EPS, PolyCoeffs::eps),
    };
    let out = ffn_forward(&tape.constant(x.clone()), &vars, spec.kind)?;
    Ok((*out.value()).clone())
}

/// Output of one forward pass on a tape.
pub struct Forward<'t> {
    /// `[B, S, V]`
    pub logits: Var<'t>,
    /// Residual stream after each block, `[B, S, H]` each.
    pub hidden: Vec<Var<'t>>,
    /// Parameters as bound on the tape, in [`Transformer::params`] order.
    pub params: Vec<Var<'t>>,
}

/// Pre-norm causal decoder with learned positions and no biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformer {
    config: TransformerConfig,
    params: Vec<Param>,
    layout: Layout,
}

impl Transformer {
    /// Fresh model; every matrix and embedding is drawn from
    /// `N(0, 1/(2.5 H))`, gains start at one, coefficients at `a_i = 1/r`.
    pub fn new(config: TransformerConfig, seed: u64) -> Result<Self, TransformerError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, config.init_std()).expect("positive std");
        let mut params = Vec::new();
        let mut add = |name: String, role: ParamRole, shape: Vec<usize>| -> usize {
            let value = match role {
                ParamRole::Gain => Tensor::ones(shape),
                ParamRole::PolyCoeffs => {
                    PolyCoeffs::init(config.poly_order).expect("validated order").to_tensor()
                }
                _ => {
                    let n = shape.iter().product();
                    let data = (0..n).map(|_| normal.sample(&mut rng)).collect();
                    Tensor::new(shape, data).expect("positive extents")
                }
            };
            params.push(Param { name, role, value });
            params.len() - 1
        };
        let (h, i, v) = (config.d_model, config.intermediate_size(), config.vocab_size);
        let tok_emb = add("tok_emb".into(), ParamRole::Embedding, vec![v, h]);
        let pos_emb = add("pos_emb".into(), ParamRole::Embedding, vec![config.context_length, h]);
        let mut layers = Vec::with_capacity(config.n_layers);
        for l in 0..config.n_layers {
            let p = |s: &str| format!("layers.{l}.{s}");
            layers.push(LayerSlots {
                attn_norm: add(p("attn_norm"), ParamRole::Gain, vec![h]),
                wq: add(p("wq"), ParamRole::Matrix, vec![h, h]),
                wk: add(p("wk"), ParamRole::Matrix, vec![h, h]),
                wv: add(p("wv"), ParamRole::Matrix, vec![h, h]),
                wo: add(p("wo"), ParamRole::Matrix, vec![h, h]),
                ffn_norm: add(p("ffn_norm"), ParamRole::Gain, vec![h]),
                w1: add(p("w1"), ParamRole::Matrix, vec![h, i]),
                w2: add(p("w2"), ParamRole::Matrix, vec![i, h]),
                w3: config
                    .activation
                    .is_gated()
                    .then(|| add(p("w3"), ParamRole::Matrix, vec![h, i])),
                coeffs: config
                    .activation
                    .has_coeffs()
                    .then(|| add(p("coeffs"), ParamRole::PolyCoeffs, vec![config.poly_order + 1])),
            });
        }
        let final_norm = add("final_norm".into(), ParamRole::Gain, vec![h]);
        let head = add("head".into(), ParamRole::Matrix, vec![h, v]);
        let layout = Layout {
            tok_emb,
            pos_emb,
            layers,
            final_norm,
            head,
        };
        Ok(Self {
            config,
            params,
            layout,
        })
    }

    /// Rebuild a model from named tensors (e.g. a checkpoint). Names and
    /// shapes must match what [`Transformer::new`] would produce.
    pub fn from_params(config: TransformerConfig, named: Vec<(String, Tensor)>) -> Result<Self, TransformerError> {
        let mut model = Self::new(config, 0)?;
        if named.len() != model.params.len() {
            return Err(TransformerError::Checkpoint(format!(
                "expected {} tensors, found {}",
                model.params.len(),
                named.len()
            )));
        }
        for (p, (name, value)) in model.params.iter_mut().zip(named) {
            if p.name != name || p.value.shape() != value.shape() {
                return Err(TransformerError::Checkpoint(format!(
                    "tensor `{name}` {:?} does not match expected `{}` {:?}",
                    value.shape(),
                    p.name,
                    p.value.shape()
                )));
            }
            p.value = value;
        }
        Ok(model)
    }

    pub fn config(&self) -> &TransformerConfig {
        &self.config
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.params.iter_mut().find(|p| p.name == name)
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(|p| p.value.numel()).sum()
    }

    /// `(W1, W2)` of layer `l`.
    pub fn ffn_weights(&self, l: usize) -> (&Tensor, &Tensor) {
        let s = &self.layout.layers[l];
        (&self.params[s.w1].value, &self.params[s.w2].value)
    }

    /// Activation coefficients of layer `l`, if the activation has any.
    pub fn coeffs(&self, l: usize) -> Option<&Tensor> {
        self.layout.layers[l].coeffs.map(|i| &self.params[i].value)
    }

    fn check_tokens(&self, tokens: &[usize], batch: usize, seq: usize) -> Result<(), TransformerError> {
        if seq > self.config.context_length {
            return Err(TransformerError::SequenceTooLong {
                len: seq,
                max: self.config.context_length,
            });
        }
        if batch == 0 || seq == 0 || tokens.len() != batch * seq {
            return Err(TransformerError::Config(format!(
                "expected {batch} x {seq} tokens, got {}",
                tokens.len()
            )));
        }
        if let Some(&t) = tokens.iter().find(|&&t| t >= self.config.vocab_size) {
            return Err(TransformerError::TokenOutOfRange {
                token: t,
                vocab: self.config.vocab_size,
            });
        }
        Ok(())
    }

    /// Record a forward pass. With `trainable`, parameters are tape leaves.
    pub fn forward<'t>(
        &self,
        tape: &'t Tape,
        tokens: &[usize],
        batch: usize,
        seq: usize,
        trainable: bool,
    ) -> Result<Forward<'t>, TransformerError> {
        self.check_tokens(tokens, batch, seq)?;
        let cfg = &self.config;
        let (h, nh, hd) = (cfg.d_model, cfg.n_heads, cfg.head_dim());
        let p: Vec<Var<'t>> = self
            .params
            .iter()
            .map(|p| {
                if trainable {
                    tape.leaf(p.value.clone())
                } else {
                    tape.constant(p.value.clone())
                }
            })
            .collect();
        let lay = &self.layout;
        let positions: Vec<usize> = (0..seq).collect();
        let mut x = p[lay.tok_emb]
            .embedding(tokens)?
            .reshape(vec![batch, seq, h])?
            .add(&p[lay.pos_emb].embedding(&positions)?)?;
        let norm = |v: &Var<'t>, gain: usize| -> Result<Var<'t>, TensorError> {
            v.rms_normalize(cfg.norm_eps)?.mul(&p[gain])
        };
        let scale = 1.0 / (hd as f64).sqrt();
        let mut hidden = Vec::with_capacity(cfg.n_layers);
        for s in &lay.layers {
            let xn = norm(&x, s.attn_norm)?;
            let q = xn.matmul(&p[s.wq])?.reshape(vec![batch, seq, nh, hd])?.permute(&[0, 2, 1, 3])?;
            let k = xn.matmul(&p[s.wk])?.reshape(vec![batch, seq, nh, hd])?.permute(&[0, 2, 3, 1])?;
            let v = xn.matmul(&p[s.wv])?.reshape(vec![batch, seq, nh, hd])?.permute(&[0, 2, 1, 3])?;
            let attn = q.matmul(&k)?.scale(scale)?.causal_softmax()?;
            let ctx = attn
                .matmul(&v)?
                .permute(&[0, 2, 1, 3])?
                .reshape(vec![batch, seq, h])?;
            x = x.add(&ctx.matmul(&p[s.wo])?)?;
            let ffn = FfnVars {
                w1: p[s.w1],
                w2: p[s.w2],
                w3: s.w3.map(|i| p[i]),
                coeffs: s.coeffs.map(|i| p[i]),
                poly_eps: POLYNORM_EPS,
            };
            x = x.add(&ffn_forward(&norm(&x, s.ffn_norm)?, &ffn, cfg.activation)?)?;
            hidden.push(x);
        }
        let logits = norm(&x, lay.final_norm)?.matmul(&p[lay.head])?;
        Ok(Forward {
            logits,
            hidden,
            params: p,
        })
    }

    /// `[B, S, V]` logits for `batch x seq` row-major token ids.
    pub fn logits(&self, tokens: &[usize], batch: usize, seq: usize) -> Result<Tensor, TransformerError> {
        let tape = Tape::new();
        let f = self.forward(&tape, tokens, batch, seq, false)?;
        Ok((*f.logits.value()).clone())
    }

    /// Residual stream after every block.
    pub fn hidden_states(&self, tokens: &[usize], batch: usize, seq: usize) -> Result<Vec<Tensor>, TransformerError> {
        let tape = Tape::new();
        let f = self.forward(&tape, tokens, batch, seq, false)?;
        Ok(f.hidden.iter().map(|v| (*v.value()).clone()).collect())
    }

    /// Mean next-token cross-entropy.
    pub fn loss(&self, inputs: &[usize], targets: &[usize], batch: usize, seq: usize) -> Result<f64, TransformerError> {
        let tape = Tape::new();
        let f = self.forward(&tape, inputs, batch, seq, false)?;
        Ok(f.logits.cross_entropy(targets)?.value().item()?)
    }

    /// Loss and one gradient per parameter, in [`Transformer::params`] order.
    pub fn loss_and_grads(
        &self,
        inputs: &[usize],
        targets: &[usize],
        batch: usize,
        seq: usize,
    ) -> Result<(f64, Vec<Tensor>), TransformerError> {
        let tape = Tape::new();
        let f = self.forward(&tape, inputs, batch, seq, true)?;
        let loss = f.logits.cross_entropy(targets)?;
        loss.backward()?;
        let grads = f
            .params
            .iter()
            .zip(&self.params)
            .map(|(v, p)| v.grad().unwrap_or_else(|| Tensor::zeros_like(&p.value)))
            .collect();
        Ok((loss.value().item()?, grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ActivationKind) -> Transformer {
        Transformer::new(TransformerConfig::toy(kind, 2, 16, 8), 7).unwrap()
    }

    #[test]
    fn ffn_identity_relu() {
        let eye = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let x = Tensor::new(vec![1, 1, 2], vec![-1.0, 2.0]).unwrap();
        let y = ffn_forward_tensor(&x, &eye, &eye, None, &ActivationSpec::simple(ActivationKind::Relu)).unwrap();
        assert_eq!(y.data(), &[0.0, 2.0]);
    }

    #[test]
    fn param_count_matches_config() {
        for kind in ActivationKind::ALL {
            let m = small(kind);
            assert_eq!(m.num_params(), m.config().num_params(), "{kind}");
        }
    }

    #[test]
    fn single_token_shape() {
        let m = small(ActivationKind::Gelu);
        let logits = m.logits(&[5], 1, 1).unwrap();
        assert_eq!(logits.shape(), &[1, 1, 257]);
    }

    #[test]
    fn overlong_and_out_of_vocab_inputs() {
        let m = small(ActivationKind::Relu);
        assert!(matches!(
            m.logits(&[0; 9], 1, 9),
            Err(TransformerError::SequenceTooLong { len: 9, max: 8 })
        ));
        assert!(matches!(
            m.logits(&[300], 1, 1),
            Err(TransformerError::TokenOutOfRange { .. })
        ));
    }

    #[test]
    fn causal_mask_hides_future() {
        let m = small(ActivationKind::PolyNorm);
        let a = m.logits(&[1, 2, 3, 4, 5, 6], 1, 6).unwrap();
        let b = m.logits(&[1, 2, 3, 6, 4, 5], 1, 6).unwrap();
        let v = 257;
        assert_eq!(a.data()[..3 * v], b.data()[..3 * v]);
        assert_ne!(a.data()[3 * v..4 * v], b.data()[3 * v..4 * v]);
    }

    #[test]
    fn zero_head_gives_uniform_logits() {
        let mut m = small(ActivationKind::SwiGlu);
        m.param_mut("head").unwrap().value = Tensor::zeros(vec![16, 257]);
        let logits = m.logits(&[1, 2, 3], 1, 3).unwrap();
        assert!(logits.data().iter().all(|&v| v == 0.0));
        let loss = m.loss(&[1, 2, 3], &[2, 3, 4], 1, 3).unwrap();
        assert!((loss - 257f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn hidden_states_per_layer() {
        let m = small(ActivationKind::PolyRelu);
        let hs = m.hidden_states(&[1, 2, 3, 4, 5, 6], 2, 3).unwrap();
        assert_eq!(hs.len(), 2);
        assert!(hs.iter().all(|h| h.shape() == [2, 3, 16]));
    }

    #[test]
    fn grads_cover_every_param() {
        let m = small(ActivationKind::PolyNorm);
        let (loss, grads) = m.loss_and_grads(&[1, 2, 3, 4], &[2, 3, 4, 5], 1, 4).unwrap();
        assert!(loss.is_finite());
        assert_eq!(grads.len(), m.params().len());
        for (g, p) in grads.iter().zip(m.params()) {
            assert_eq!(g.shape(), p.value.shape());
            // only the embedding rows of unused tokens/positions stay zero
            if p.role != ParamRole::Embedding {
                assert!(g.data().iter().any(|&v| v != 0.0), "{}", p.name);
            }
        }
    }
}
