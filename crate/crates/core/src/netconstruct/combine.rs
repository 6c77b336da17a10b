//! Composition, parallel stacking and affine pre-maps.

use super::builder::Family;
use super::net::{Act, Layer, LayeredNet, Row};
use super::NetError;

/// `g(f(x))`. An affine output layer of `f` is folded into the first layer of `g`.
pub fn compose(f: &LayeredNet, g: &LayeredNet) -> Result<LayeredNet, NetError> {
    if f.output_dim() != g.input_dim() {
        return Err(NetError::Invalid(format!(
            "compose: {} outputs feed {} inputs",
            f.output_dim(),
            g.input_dim()
        )));
    }
    let mut layers = f.layers().to_vec();
    let mut g_layers = g.layers().to_vec();
    if layers.last().is_some_and(Layer::is_affine) {
        let last = layers.pop().expect("non-empty");
        g_layers[0] = fold_affine(&last.rows, &last.bias, &g_layers[0]);
    }
    layers.extend(g_layers);
    LayeredNet::new(f.input_dim(), layers)
}

/// Replace `net`'s inputs `u` by `W x + b`.
pub fn pre_affine(net: &LayeredNet, w: &[Row], b: &[f64], input_dim: usize) -> Result<LayeredNet, NetError> {
    if w.len() != net.input_dim() || b.len() != w.len() {
        return Err(NetError::Invalid("pre_affine: map does not match net inputs".into()));
    }
    let mut layers = net.layers().to_vec();
    layers[0] = fold_affine(w, b, &layers[0]);
    LayeredNet::new(input_dim, layers)
}

/// Apply `W y + b` to the outputs.
pub fn post_affine(net: &LayeredNet, w: &[Row], b: &[f64]) -> Result<LayeredNet, NetError> {
    let n = net.output_dim();
    if w.len() != b.len() || w.iter().flatten().any(|&(j, _)| j >= n) {
        return Err(NetError::Invalid("post_affine: map does not match net outputs".into()));
    }
    let map = LayeredNet::new(n, vec![Layer::affine(w.to_vec(), b.to_vec())])?;
    compose(net, &map)
}

fn fold_affine(w: &[Row], b: &[f64], next: &Layer) -> Layer {
    let mut rows = Vec::with_capacity(next.rows.len());
    let mut bias = Vec::with_capacity(next.rows.len());
    for (row, &c) in next.rows.iter().zip(&next.bias) {
        let mut acc: Vec<(usize, f64)> = Vec::new();
        let mut shift = c;
        for &(t, v) in row {
            shift += v * b[t];
            acc.extend(w[t].iter().map(|&(j, x)| (j, v * x)));
        }
        acc.sort_by_key(|p| p.0);
        let mut merged: Row = Vec::with_capacity(acc.len());
        for (j, x) in acc {
            match merged.last_mut() {
                Some(m) if m.0 == j => m.1 += x,
                _ => merged.push((j, x)),
            }
        }
        merged.retain(|p| p.1 != 0.0);
        rows.push(merged);
        bias.push(shift);
    }
    Layer::new(rows, bias, next.acts.clone())
}

/// Insert `extra` layers before an affine output layer by carrying each
/// output through `unit(z) - unit(-z)` pairs.
pub fn pad_depth(net: &LayeredNet, extra: usize, fam: Family) -> Result<LayeredNet, NetError> {
    if extra == 0 {
        return Ok(net.clone());
    }
    let mut layers = net.layers().to_vec();
    let out = layers.pop().expect("non-empty");
    if !out.is_affine() {
        return Err(NetError::Invalid("pad_depth needs an affine output layer".into()));
    }
    let k = out.width();
    let unit = fam.unit();
    let mut rows = Vec::with_capacity(2 * k);
    let mut bias = Vec::with_capacity(2 * k);
    for (r, &b) in out.rows.iter().zip(&out.bias) {
        rows.push(r.clone());
        bias.push(b);
        rows.push(r.iter().map(|&(j, w)| (j, -w)).collect());
        bias.push(-b);
    }
    layers.push(Layer::new(rows, bias, vec![unit.clone(); 2 * k]));
    for _ in 1..extra {
        let rows = (0..2 * k).map(|i| vec![(i, 1.0)]).collect();
        layers.push(Layer::new(rows, vec![0.0; 2 * k], vec![unit.clone(); 2 * k]));
    }
    let rows = (0..k).map(|i| vec![(2 * i, 1.0), (2 * i + 1, -1.0)]).collect();
    layers.push(Layer::affine(rows, vec![0.0; k]));
    LayeredNet::new(net.input_dim(), layers)
}

/// Run nets side by side on a shared input; outputs are concatenated.
/// Shallower nets are padded with `fam` passthroughs.
pub fn stack(nets: &[LayeredNet], fam: Family) -> Result<LayeredNet, NetError> {
    let first = nets.first().ok_or_else(|| NetError::Invalid("stack of zero nets".into()))?;
    let d = first.input_dim();
    if nets.iter().any(|n| n.input_dim() != d) {
        return Err(NetError::Invalid("stack: input dims differ".into()));
    }
    let depth = nets.iter().map(LayeredNet::depth).max().expect("non-empty");
    let padded = nets
        .iter()
        .map(|n| pad_depth(n, depth - n.depth(), fam))
        .collect::<Result<Vec<_>, _>>()?;
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        let mut acts: Vec<Act> = Vec::new();
        let mut offset = 0;
        for n in &padded {
            let layer = &n.layers()[l];
            let shift = if l == 0 { 0 } else { offset };
            rows.extend(layer.rows.iter().map(|r| r.iter().map(|&(j, w)| (j + shift, w)).collect::<Row>()));
            bias.extend_from_slice(&layer.bias);
            acts.extend_from_slice(&layer.acts);
            if l > 0 {
                offset += n.layers()[l - 1].width();
            }
        }
        layers.push(Layer::new(rows, bias, acts));
    }
    LayeredNet::new(d, layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netconstruct::net::random_relu_net;

    #[test]
    fn compose_matches_sequential_eval() {
        let f = random_relu_net(1, &[5], 1);
        let g = random_relu_net(1, &[3, 3], 2);
        let h = compose(&f, &g).unwrap();
        assert_eq!(h.depth(), f.depth() + g.depth() - 1);
        for x in [-1.0, -0.2, 0.4, 0.9] {
            let want = g.eval1(f.eval1(x));
            assert!((h.eval1(x) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn stack_pads_and_concatenates() {
        let a = random_relu_net(1, &[4], 3);
        let b = random_relu_net(1, &[2, 2, 2], 4);
        for fam in [Family::Relu, Family::PolyRelu { order: 3 }] {
            let s = stack(&[a.clone(), b.clone()], fam).unwrap();
            assert_eq!(s.depth(), 4);
            for x in [-0.8, 0.1, 0.7] {
                let out = s.eval(&[x]).unwrap();
                assert!((out[0] - a.eval1(x)).abs() < 1e-12);
                assert!((out[1] - b.eval1(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn affine_maps() {
        let n = random_relu_net(1, &[3], 5);
        let pre = pre_affine(&n, &[vec![(0, 2.0), (1, -1.0)]], &[0.5], 2).unwrap();
        let post = post_affine(&n, &[vec![(0, 3.0)]], &[-1.0]).unwrap();
        for (x, y) in [(0.1, 0.3), (-0.5, 0.2)] {
            assert!((pre.eval(&[x, y]).unwrap()[0] - n.eval1(2.0 * x - y + 0.5)).abs() < 1e-12);
            assert!((post.eval1(x) - (3.0 * n.eval1(x) - 1.0)).abs() < 1e-12);
        }
        assert_eq!(post.depth(), n.depth());
    }
}
