use std::cell::RefCell;
use std::rc::Rc;

use super::kernels::{self, gelu, gelu_grad, sigmoid};
use super::{Result, Tensor, TensorError};

#[derive(Debug)]
enum Op {
    Leaf,
    Constant,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Offset(usize),
    MatMul(usize, usize),
    Reshape(usize),
    Permute(usize, Vec<usize>),
    Relu(usize),
    PowI(usize, i32),
    Silu(usize),
    Gelu(usize),
    RmsNorm { input: usize, inv_rms: Vec<f64> },
    CausalSoftmax(usize),
    CrossEntropy { logits: usize, targets: Vec<usize>, probs: Vec<f64> },
    Sum(usize),
    Mean(usize),
    Index(usize, usize),
    Embedding { table: usize, ids: Vec<usize> },
}

#[derive(Debug)]
struct Node {
    value: Rc<Tensor>,
    op: Op,
    requires_grad: bool,
    grad: Option<Tensor>,
}

/// Records primitive ops in execution order. Confined to one thread.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a leaf that receives a gradient on backward.
    pub fn leaf(&self, value: Tensor) -> Var<'_> {
        self.push_node(value, Op::Leaf, true)
    }

    /// Register a value that is treated as a constant.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push_node(value, Op::Constant, false)
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Clear accumulated gradients on every leaf.
    pub fn zero_grad(&self) {
        for node in self.nodes.borrow_mut().iter_mut() {
            node.grad = None;
        }
    }

    fn push_node(&self, value: Tensor, op: Op, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value: Rc::new(value),
            op,
            requires_grad,
            grad: None,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn record(&self, name: &'static str, value: Tensor, op: Op, inputs: &[usize]) -> Result<Var<'_>> {
        if !value.all_finite() {
            return Err(TensorError::NonFinite { op: name });
        }
        let requires_grad = {
            let nodes = self.nodes.borrow();
            inputs.iter().any(|&i| nodes[i].requires_grad)
        };
        let op = if requires_grad { op } else { Op::Constant };
        Ok(self.push_node(value, op, requires_grad))
    }

    fn value(&self, id: usize) -> Rc<Tensor> {
        Rc::clone(&self.nodes.borrow()[id].value)
    }
}

/// `rhs` may match `lhs` exactly or a suffix of it (leading-dimension broadcast).
fn broadcast_len(op: &'static str, lhs: &Tensor, rhs: &Tensor) -> Result<usize> {
    let (ls, rs) = (lhs.shape(), rhs.shape());
    if rs.len() <= ls.len() && ls[ls.len() - rs.len()..] == *rs {
        Ok(rhs.numel())
    } else {
        Err(TensorError::ShapeMismatch {
            op,
            lhs: ls.to_vec(),
            rhs: rs.to_vec(),
        })
    }
}

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor {
        shape: t.shape.clone(),
        data: t.data.iter().map(|&x| f(x)).collect(),
    }
}

fn zip_broadcast(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let n = b.numel();
    let data = a
        .data
        .iter()
        .enumerate()
        .map(|(i, &x)| f(x, b.data[i % n]))
        .collect();
    Tensor {
        shape: a.shape.clone(),
        data,
    }
}

struct MatMulDims {
    batch: usize,
    m: usize,
    k: usize,
    n: usize,
    shared_rhs: bool,
}

fn matmul_dims(a: &Tensor, b: &Tensor) -> Result<MatMulDims> {
    let err = || TensorError::ShapeMismatch {
        op: "matmul",
        lhs: a.shape.clone(),
        rhs: b.shape.clone(),
    };
    let (ar, br) = (a.rank(), b.rank());
    if ar < 2 || br < 2 {
        return Err(err());
    }
    let (m, k) = (a.shape[ar - 2], a.shape[ar - 1]);
    let (k2, n) = (b.shape[br - 2], b.shape[br - 1]);
    if k != k2 {
        return Err(err());
    }
    let batch: usize = a.shape[..ar - 2].iter().product();
    let shared_rhs = br == 2;
    if !shared_rhs && a.shape[..ar - 2] != b.shape[..br - 2] {
        return Err(err());
    }
    Ok(MatMulDims {
        batch,
        m,
        k,
        n,
        shared_rhs,
    })
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn value(&self) -> Rc<Tensor> {
        self.tape.value(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape.clone()
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.nodes.borrow()[self.id].requires_grad
    }

    /// Accumulated gradient (leaves only; populated by [`Var::backward`]).
    pub fn grad(&self) -> Option<Tensor> {
        self.tape.nodes.borrow()[self.id].grad.clone()
    }

    fn same_tape(&self, other: &Var<'t>) {
        assert!(
            std::ptr::eq(self.tape, other.tape),
            "vars belong to different tapes"
        );
    }

    pub fn add(&self, rhs: &Var<'t>) -> Result<Var<'t>> {
        self.same_tape(rhs);
        let (a, b) = (self.value(), rhs.value());
        broadcast_len("add", &a, &b)?;
        let out = zip_broadcast(&a, &b, |x, y| x + y);
        self.tape.record("add", out, Op::Add(self.id, rhs.id), &[self.id, rhs.id])
    }

    pub fn sub(&self, rhs: &Var<'t>) -> Result<Var<'t>> {
        self.same_tape(rhs);
        let (a, b) = (self.value(), rhs.value());
        broadcast_len("sub", &a, &b)?;
        let out = zip_broadcast(&a, &b, |x, y| x - y);
        self.tape.record("sub", out, Op::Sub(self.id, rhs.id), &[self.id, rhs.id])
    }

    /// Elementwise product; `rhs` may be a suffix-broadcast operand (e.g. a scalar coefficient).
    pub fn mul(&self, rhs: &Var<'t>) -> Result<Var<'t>> {
        self.same_tape(rhs);
        let (a, b) = (self.value(), rhs.value());
        broadcast_len("mul", &a, &b)?;
        let out = zip_broadcast(&a, &b, |x, y| x * y);
        self.tape.record("mul", out, Op::Mul(self.id, rhs.id), &[self.id, rhs.id])
    }

    pub fn scale(&self, factor: f64) -> Result<Var<'t>> {
        let out = map(&self.value(), |x| x * factor);
        self.tape.record("scale", out, Op::Scale(self.id, factor), &[self.id])
    }

    pub fn neg(&self) -> Result<Var<'t>> {
        self.scale(-1.0)
    }

    pub fn add_scalar(&self, offset: f64) -> Result<Var<'t>> {
        let out = map(&self.value(), |x| x + offset);
        self.tape.record("add_scalar", out, Op::Offset(self.id), &[self.id])
    }

    /// `[.., m, k] x [k, n]` (shared right operand) or `[.., m, k] x [.., k, n]`.
    pub fn matmul(&self, rhs: &Var<'t>) -> Result<Var<'t>> {
        self.same_tape(rhs);
        let (a, b) = (self.value(), rhs.value());
        let d = matmul_dims(&a, &b)?;
        let mut shape = a.shape[..a.rank() - 1].to_vec();
        shape.push(d.n);
        let mut data = vec![0.0; d.batch * d.m * d.n];
        if d.shared_rhs {
            kernels::gemm(&a.data, &b.data, &mut data, d.batch * d.m, d.k, d.n);
        } else {
            let (sa, sb, sc) = (d.m * d.k, d.k * d.n, d.m * d.n);
            for t in 0..d.batch {
                kernels::gemm(
                    &a.data[t * sa..(t + 1) * sa],
                    &b.data[t * sb..(t + 1) * sb],
                    &mut data[t * sc..(t + 1) * sc],
                    d.m,
                    d.k,
                    d.n,
                );
            }
        }
        let out = Tensor { shape, data };
        self.tape
            .record("matmul", out, Op::MatMul(self.id, rhs.id), &[self.id, rhs.id])
    }

    pub fn reshape(&self, shape: impl Into<Vec<usize>>) -> Result<Var<'t>> {
        let out = self.value().reshape(shape)?;
        self.tape.record("reshape", out, Op::Reshape(self.id), &[self.id])
    }

    /// Output axis `i` is input axis `axes[i]`.
    pub fn permute(&self, axes: &[usize]) -> Result<Var<'t>> {
        let a = self.value();
        let mut seen = vec![false; a.rank()];
        if axes.len() != a.rank() || axes.iter().any(|&x| x >= a.rank() || std::mem::replace(&mut seen[x], true)) {
            return Err(TensorError::Invalid(format!(
                "permute: {axes:?} is not a permutation of rank {}",
                a.rank()
            )));
        }
        let (data, shape) = kernels::permute(&a.data, &a.shape, axes);
        let out = Tensor { shape, data };
        self.tape
            .record("permute", out, Op::Permute(self.id, axes.to_vec()), &[self.id])
    }

    pub fn relu(&self) -> Result<Var<'t>> {
        let out = map(&self.value(), |x| x.max(0.0));
        self.tape.record("relu", out, Op::Relu(self.id), &[self.id])
    }

    pub fn powi(&self, exp: i32) -> Result<Var<'t>> {
        let out = map(&self.value(), |x| x.powi(exp));
        self.tape.record("powi", out, Op::PowI(self.id, exp), &[self.id])
    }

    pub fn silu(&self) -> Result<Var<'t>> {
        let out = map(&self.value(), |x| x * sigmoid(x));
        self.tape.record("silu", out, Op::Silu(self.id), &[self.id])
    }

    /// Exact GELU, `x * Phi(x)` with the error-function CDF.
    pub fn gelu(&self) -> Result<Var<'t>> {
        let out = map(&self.value(), gelu);
        self.tape.record("gelu", out, Op::Gelu(self.id), &[self.id])
    }

    /// `v / sqrt(mean(v^2) + eps)` along the trailing axis.
    pub fn rms_normalize(&self, eps: f64) -> Result<Var<'t>> {
        let a = self.value();
        let d = *a.shape.last().ok_or_else(|| {
            TensorError::Invalid("rms_normalize needs a trailing feature axis".into())
        })?;
        let rows = a.numel() / d;
        let mut inv_rms = Vec::with_capacity(rows);
        let mut data = Vec::with_capacity(a.numel());
        for row in a.data.chunks_exact(d) {
            let ms = row.iter().map(|x| x * x).sum::<f64>() / d as f64;
            let r = 1.0 / (ms + eps).sqrt();
            inv_rms.push(r);
            data.extend(row.iter().map(|x| x * r));
        }
        let out = Tensor {
            shape: a.shape.clone(),
            data,
        };
        self.tape.record(
            "rms_normalize",
            out,
            Op::RmsNorm {
                input: self.id,
                inv_rms,
            },
            &[self.id],
        )
    }

    /// Row softmax over the last axis of `[.., s, s]` scores with positions
    /// `j > i` masked out.
    pub fn causal_softmax(&self) -> Result<Var<'t>> {
        let a = self.value();
        let r = a.rank();
        if r < 2 || a.shape[r - 1] != a.shape[r - 2] {
            return Err(TensorError::Invalid(format!(
                "causal_softmax expects [.., s, s], got {:?}",
                a.shape
            )));
        }
        let s = a.shape[r - 1];
        let mut data = vec![0.0; a.numel()];
        for (blk, out) in a.data.chunks_exact(s * s).zip(data.chunks_exact_mut(s * s)) {
            for i in 0..s {
                let row = &blk[i * s..i * s + i + 1];
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for (j, &x) in row.iter().enumerate() {
                    let e = (x - max).exp();
                    out[i * s + j] = e;
                    z += e;
                }
                for v in &mut out[i * s..i * s + i + 1] {
                    *v /= z;
                }
            }
        }
        let out = Tensor {
            shape: a.shape.clone(),
            data,
        };
        self.tape
            .record("causal_softmax", out, Op::CausalSoftmax(self.id), &[self.id])
    }

    /// Mean token cross-entropy of `[.., V]` logits against class ids.
    pub fn cross_entropy(&self, targets: &[usize]) -> Result<Var<'t>> {
        let a = self.value();
        let v = *a.shape.last().ok_or_else(|| {
            TensorError::Invalid("cross_entropy needs a class axis".into())
        })?;
        let rows = a.numel() / v;
        if targets.len() != rows {
            return Err(TensorError::ShapeMismatch {
                op: "cross_entropy",
                lhs: a.shape.clone(),
                rhs: vec![targets.len()],
            });
        }
        let mut probs = Vec::with_capacity(a.numel());
        let mut loss = 0.0;
        for (row, &t) in a.data.chunks_exact(v).zip(targets) {
            if t >= v {
                return Err(TensorError::IndexOutOfRange {
                    op: "cross_entropy",
                    index: t,
                    extent: v,
                });
            }
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|x| (x - max).exp()).sum();
            let lse = max + z.ln();
            loss += lse - row[t];
            probs.extend(row.iter().map(|x| (x - lse).exp()));
        }
        let out = Tensor::scalar(loss / rows as f64);
        self.tape.record(
            "cross_entropy",
            out,
            Op::CrossEntropy {
                logits: self.id,
                targets: targets.to_vec(),
                probs,
            },
            &[self.id],
        )
    }

    pub fn sum(&self) -> Result<Var<'t>> {
        let total = self.value().data.iter().sum();
        self.tape.record("sum", Tensor::scalar(total), Op::Sum(self.id), &[self.id])
    }

    pub fn mean(&self) -> Result<Var<'t>> {
        let a = self.value();
        let total: f64 = a.data.iter().sum();
        let out = Tensor::scalar(total / a.numel() as f64);
        self.tape.record("mean", out, Op::Mean(self.id), &[self.id])
    }

    /// Flat element `index` as a rank-0 scalar.
    pub fn index(&self, index: usize) -> Result<Var<'t>> {
        let a = self.value();
        let value = *a.data.get(index).ok_or(TensorError::IndexOutOfRange {
            op: "index",
            index,
            extent: a.numel(),
        })?;
        self.tape
            .record("index", Tensor::scalar(value), Op::Index(self.id, index), &[self.id])
    }

    /// Gather rows of a `[V, H]` table; output `[ids.len(), H]`.
    pub fn embedding(&self, ids: &[usize]) -> Result<Var<'t>> {
        let table = self.value();
        if table.rank() != 2 || ids.is_empty() {
            return Err(TensorError::Invalid(format!(
                "embedding expects a [V, H] table and non-empty ids, got {:?}",
                table.shape
            )));
        }
        let (vocab, h) = (table.shape[0], table.shape[1]);
        let mut data = Vec::with_capacity(ids.len() * h);
        for &id in ids {
            if id >= vocab {
                return Err(TensorError::IndexOutOfRange {
                    op: "embedding",
                    index: id,
                    extent: vocab,
                });
            }
            data.extend_from_slice(&table.data[id * h..(id + 1) * h]);
        }
        let out = Tensor {
            shape: vec![ids.len(), h],
            data,
        };
        self.tape.record(
            "embedding",
            out,
            Op::Embedding {
                table: self.id,
                ids: ids.to_vec(),
            },
            &[self.id],
        )
    }

    /// Reverse pass from this scalar. Leaf gradients accumulate across calls
    /// until [`Tape::zero_grad`].
    pub fn backward(&self) -> Result<()> {
        let leaf_grads = {
            let nodes = self.tape.nodes.borrow();
            let root = &nodes[self.id];
            if root.value.numel() != 1 {
                return Err(TensorError::NotScalar(root.value.shape.clone()));
            }
            if !root.requires_grad {
                return Err(TensorError::Detached);
            }
            reverse_pass(&nodes, self.id)
        };
        let mut nodes = self.tape.nodes.borrow_mut();
        for (id, g) in leaf_grads {
            let node = &mut nodes[id];
            match &mut node.grad {
                Some(acc) => {
                    for (a, b) in acc.data.iter_mut().zip(&g) {
                        *a += b;
                    }
                }
                None => {
                    node.grad = Some(Tensor {
                        shape: node.value.shape.clone(),
                        data: g,
                    })
                }
            }
        }
        Ok(())
    }
}

struct GradBuf<'a> {
    nodes: &'a [Node],
    grads: Vec<Option<Vec<f64>>>,
}

impl GradBuf<'_> {
    fn slot(&mut self, id: usize) -> Option<&mut Vec<f64>> {
        if !self.nodes[id].requires_grad {
            return None;
        }
        let n = self.nodes[id].value.numel();
        Some(self.grads[id].get_or_insert_with(|| vec![0.0; n]))
    }

    fn add_elementwise(&mut self, id: usize, g: &[f64], f: impl Fn(usize, f64) -> f64) {
        if let Some(dst) = self.slot(id) {
            for (i, (d, &gi)) in dst.iter_mut().zip(g).enumerate() {
                *d += f(i, gi);
            }
        }
    }

    /// Reduce a full-shape gradient onto a suffix-broadcast operand.
    fn add_reduced(&mut self, id: usize, g: &[f64], f: impl Fn(usize, f64) -> f64) {
        if let Some(dst) = self.slot(id) {
            let n = dst.len();
            for (i, &gi) in g.iter().enumerate() {
                dst[i % n] += f(i, gi);
            }
        }
    }
}

fn reverse_pass(nodes: &[Node], root: usize) -> Vec<(usize, Vec<f64>)> {
    let mut buf = GradBuf {
        nodes,
        grads: vec![None; root + 1],
    };
    buf.grads[root] = Some(vec![1.0]);
    let mut leaves = Vec::new();
    for id in (0..=root).rev() {
        let Some(g) = buf.grads[id].take() else {
            continue;
        };
        let node = &nodes[id];
        if !node.requires_grad {
            continue;
        }
        let out = &node.value;
        match &node.op {
            Op::Leaf => leaves.push((id, g)),
            Op::Constant => {}
            Op::Add(a, b) => {
                buf.add_elementwise(*a, &g, |_, gi| gi);
                buf.add_reduced(*b, &g, |_, gi| gi);
            }
            Op::Sub(a, b) => {
                buf.add_elementwise(*a, &g, |_, gi| gi);
                buf.add_reduced(*b, &g, |_, gi| -gi);
            }
            Op::Mul(a, b) => {
                let (va, vb) = (&nodes[*a].value, &nodes[*b].value);
                let nb = vb.numel();
                buf.add_elementwise(*a, &g, |i, gi| gi * vb.data[i % nb]);
                buf.add_reduced(*b, &g, |i, gi| gi * va.data[i]);
            }
            Op::Scale(a, f) => buf.add_elementwise(*a, &g, |_, gi| gi * f),
            Op::Offset(a) | Op::Reshape(a) => buf.add_elementwise(*a, &g, |_, gi| gi),
            Op::MatMul(a, b) => {
                let (va, vb) = (&nodes[*a].value, &nodes[*b].value);
                let d = matmul_dims(va, vb).expect("validated in forward");
                if let Some(ga) = buf.slot(*a) {
                    if d.shared_rhs {
                        kernels::gemm_nt(&g, &vb.data, ga, d.batch * d.m, d.k, d.n);
                    } else {
                        let (sa, sb, sc) = (d.m * d.k, d.k * d.n, d.m * d.n);
                        for t in 0..d.batch {
                            kernels::gemm_nt(
                                &g[t * sc..(t + 1) * sc],
                                &vb.data[t * sb..(t + 1) * sb],
                                &mut ga[t * sa..(t + 1) * sa],
                                d.m,
                                d.k,
                                d.n,
                            );
                        }
                    }
                }
                if let Some(gb) = buf.slot(*b) {
                    if d.shared_rhs {
                        kernels::gemm_tn(&va.data, &g, gb, d.batch * d.m, d.k, d.n);
                    } else {
                        let (sa, sb, sc) = (d.m * d.k, d.k * d.n, d.m * d.n);
                        for t in 0..d.batch {
                            kernels::gemm_tn(
                                &va.data[t * sa..(t + 1) * sa],
                                &g[t * sc..(t + 1) * sc],
                                &mut gb[t * sb..(t + 1) * sb],
                                d.m,
                                d.k,
                                d.n,
                            );
                        }
                    }
                }
            }
            Op::Permute(a, axes) => {
                let (back, _) = kernels::permute(&g, &out.shape, &kernels::inverse_axes(axes));
                buf.add_elementwise(*a, &back, |_, gi| gi);
            }
            Op::Relu(a) => {
                let va = &nodes[*a].value;
                // subgradient 0 at the kink
                buf.add_elementwise(*a, &g, |i, gi| if va.data[i] > 0.0 { gi } else { 0.0 });
            }
            Op::PowI(a, e) => {
                let va = &nodes[*a].value;
                let e = *e;
                buf.add_elementwise(*a, &g, |i, gi| gi * f64::from(e) * va.data[i].powi(e - 1));
            }
            Op::Silu(a) => {
                let va = &nodes[*a].value;
                buf.add_elementwise(*a, &g, |i, gi| {
                    let x = va.data[i];
                    let s = sigmoid(x);
                    gi * s * (1.0 + x * (1.0 - s))
                });
            }
            Op::Gelu(a) => {
                let va = &nodes[*a].value;
                buf.add_elementwise(*a, &g, |i, gi| gi * gelu_grad(va.data[i]));
            }
            Op::RmsNorm { input, inv_rms } => {
                let va = &nodes[*input].value;
                let d = *va.shape.last().expect("validated in forward");
                if let Some(dst) = buf.slot(*input) {
                    for (row, &r) in inv_rms.iter().enumerate() {
                        let x = &va.data[row * d..(row + 1) * d];
                        let gr = &g[row * d..(row + 1) * d];
                        let dot: f64 = x.iter().zip(gr).map(|(a, b)| a * b).sum();
                        let c = r * r * r * dot / d as f64;
                        for j in 0..d {
                            dst[row * d + j] += r * gr[j] - c * x[j];
                        }
                    }
                }
            }
            Op::CausalSoftmax(a) => {
                let s = *out.shape.last().expect("validated in forward");
                if let Some(dst) = buf.slot(*a) {
                    for blk in 0..out.numel() / (s * s) {
                        for i in 0..s {
                            let base = blk * s * s + i * s;
                            let y = &out.data[base..base + i + 1];
                            let gr = &g[base..base + i + 1];
                            let dot: f64 = y.iter().zip(gr).map(|(a, b)| a * b).sum();
                            for j in 0..=i {
                                dst[base + j] += y[j] * (gr[j] - dot);
                            }
                        }
                    }
                }
            }
            Op::CrossEntropy {
                logits,
                targets,
                probs,
            } => {
                let v = probs.len() / targets.len();
                let scale = g[0] / targets.len() as f64;
                if let Some(dst) = buf.slot(*logits) {
                    for (row, &t) in targets.iter().enumerate() {
                        for j in 0..v {
                            let onehot = if j == t { 1.0 } else { 0.0 };
                            dst[row * v + j] += scale * (probs[row * v + j] - onehot);
                        }
                    }
                }
            }
            Op::Sum(a) => {
                if let Some(dst) = buf.slot(*a) {
                    dst.iter_mut().for_each(|d| *d += g[0]);
                }
            }
            Op::Mean(a) => {
                if let Some(dst) = buf.slot(*a) {
                    let s = g[0] / dst.len() as f64;
                    dst.iter_mut().for_each(|d| *d += s);
                }
            }
            Op::Index(a, index) => {
                if let Some(dst) = buf.slot(*a) {
                    dst[*index] += g[0];
                }
            }
            Op::Embedding { table, ids } => {
                let h = out.shape[1];
                if let Some(dst) = buf.slot(*table) {
                    for (row, &id) in ids.iter().enumerate() {
                        for j in 0..h {
                            dst[id * h + j] += g[row * h + j];
                        }
                    }
                }
            }
        }
    }
    leaves.sort_by_key(|(id, _)| *id);
    leaves
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t2(rows: &[&[f64]]) -> Tensor {
        Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn matmul_by_hand() {
        let tape = Tape::new();
        let a = tape.constant(t2(&[&[1.0, 2.0], &[3.0, 4.0]]));
        let b = tape.constant(t2(&[&[1.0], &[1.0]]));
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), vec![2, 1]);
        assert_eq!(c.value().data(), &[3.0, 7.0]);
    }

    #[test]
    fn add_zeros_is_identity() {
        let tape = Tape::new();
        let x = Tensor::new(vec![2, 3], vec![1.0, -2.0, 3.5, 0.0, 7.0, -1.25]).unwrap();
        let a = tape.constant(x.clone());
        let z = tape.constant(Tensor::zeros_like(&x));
        assert_eq!(*a.add(&z).unwrap().value(), x);
    }

    #[test]
    fn powi_elementwise() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::from_vec(vec![3.0, 4.0]));
        assert_eq!(x.powi(2).unwrap().value().data(), &[9.0, 16.0]);
    }

    #[test]
    fn grad_of_sum_is_ones() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![2, 2, 3], (0..12).map(f64::from).collect()).unwrap());
        x.sum().unwrap().backward().unwrap();
        assert_eq!(x.grad().unwrap(), Tensor::ones(vec![2, 2, 3]));
    }

    #[test]
    fn grad_of_sum_of_squares() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![3.0, 4.0]));
        x.powi(2).unwrap().sum().unwrap().backward().unwrap();
        assert_eq!(x.grad().unwrap().data(), &[6.0, 8.0]);
    }

    #[test]
    fn backward_accumulates_then_resets() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![3.0, 4.0]));
        let loss = x.powi(2).unwrap().sum().unwrap();
        loss.backward().unwrap();
        let first = x.grad().unwrap();
        loss.backward().unwrap();
        assert_eq!(x.grad().unwrap().data(), &[12.0, 16.0]);
        tape.zero_grad();
        loss.backward().unwrap();
        assert_eq!(x.grad().unwrap(), first);
    }

    #[test]
    fn backward_rejects_non_scalar_and_detached() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]));
        assert!(matches!(x.powi(2).unwrap().backward(), Err(TensorError::NotScalar(_))));
        let c = tape.constant(Tensor::from_vec(vec![1.0, 2.0]));
        assert_eq!(c.sum().unwrap().backward(), Err(TensorError::Detached));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let tape = Tape::new();
        let a = tape.constant(Tensor::zeros(vec![2, 3]));
        let b = tape.constant(Tensor::zeros(vec![2, 3]));
        assert!(matches!(a.matmul(&b), Err(TensorError::ShapeMismatch { .. })));
        let c = tape.constant(Tensor::zeros(vec![2]));
        assert!(matches!(a.add(&c), Err(TensorError::ShapeMismatch { .. })));
        let d = tape.constant(Tensor::zeros(vec![3]));
        assert!(a.add(&d).is_ok());
    }

    #[test]
    fn non_finite_output_is_an_error() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::from_vec(vec![1e200]));
        assert_eq!(x.powi(2).unwrap_err(), TensorError::NonFinite { op: "powi" });
    }

    #[test]
    fn relu_subgradient_at_zero_is_zero() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![-1.0, 0.0, 2.0]));
        x.relu().unwrap().sum().unwrap().backward().unwrap();
        assert_eq!(x.grad().unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn constants_are_not_recorded_for_gradient() {
        let tape = Tape::new();
        let c = tape.constant(Tensor::from_vec(vec![1.0]));
        let y = c.scale(2.0).unwrap();
        assert!(!y.requires_grad());
    }

    #[test]
    fn causal_softmax_masks_future() {
        let tape = Tape::new();
        let s = tape.constant(Tensor::new(vec![2, 2], vec![0.3, 9.0, 1.0, 1.0]).unwrap());
        let p = s.causal_softmax().unwrap();
        assert_eq!(p.value().data(), &[1.0, 0.0, 0.5, 0.5]);
    }

    #[test]
    fn uniform_logits_cross_entropy_is_log_v() {
        let tape = Tape::new();
        let l = tape.constant(Tensor::zeros(vec![3, 8]));
        let loss = l.cross_entropy(&[0, 5, 7]).unwrap();
        assert!((loss.value().item().unwrap() - 8f64.ln()).abs() < 1e-15);
    }
}
