//! Tape gradients of PolyReLU and PolyNorm against central differences.
//!
//! cargo run --example gradcheck

use polycom::activations::{polynorm, polyrelu, POLYNORM_EPS};
use polycom::tensor::{finite_diff_grad, relative_error, Tape, Tensor, TensorError};

fn loss(x: &Tensor, c: &Tensor, norm: bool) -> Result<f64, TensorError> {
    let tape = Tape::new();
    let (x, c) = (tape.constant(x.clone()), tape.constant(c.clone()));
    let y = if norm { polynorm(&x, &c, POLYNORM_EPS)? } else { polyrelu(&x, &c)? };
    y.powi(2)?.sum()?.value().item()
}

fn main() -> Result<(), TensorError> {
    let x = Tensor::new(vec![2, 4], vec![0.3, -1.2, 0.8, 2.0, -0.4, 1.5, -0.9, 0.05])?;
    let c = Tensor::from_vec(vec![0.1, 0.5, -0.3, 0.2]);
    for norm in [false, true] {
        let tape = Tape::new();
        let (xv, cv) = (tape.leaf(x.clone()), tape.leaf(c.clone()));
        let y = if norm { polynorm(&xv, &cv, POLYNORM_EPS)? } else { polyrelu(&xv, &cv)? };
        y.powi(2)?.sum()?.backward()?;

        let fd_x = finite_diff_grad(|x| loss(x, &c, norm), &x, 1e-5)?;
        let fd_c = finite_diff_grad(|c| loss(&x, c, norm), &c, 1e-5)?;
        let worst = |a: &Tensor, b: &Tensor| {
            a.data().iter().zip(b.data()).map(|(p, q)| relative_error(*p, *q)).fold(0.0, f64::max)
        };
        println!(
            "{}: max relative error dx {:.2e}, dc {:.2e}",
            if norm { "polynorm" } else { "polyrelu" },
            worst(&xv.grad().expect("leaf"), &fd_x),
            worst(&cv.grad().expect("leaf"), &fd_c)
        );
    }
    Ok(())
}
