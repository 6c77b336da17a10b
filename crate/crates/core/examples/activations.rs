//! PolyReLU, PolyNorm and the baselines on a small grid.
//!
//! cargo run --example activations

use polycom::activations::{baseline_tensor, polynorm_tensor, polyrelu_tensor, ActivationKind, PolyCoeffs};
use polycom::tensor::Tensor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let xs: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.5).collect();
    let x = Tensor::new(vec![1, xs.len()], xs.clone())?;
    let c = PolyCoeffs::init(3)?;
    println!("PolyCom coefficients at init: {:?}", c.coeffs());

    let mut columns = vec![("x", x.clone())];
    for kind in [ActivationKind::Relu, ActivationKind::ReluSquared, ActivationKind::Gelu, ActivationKind::Silu] {
        columns.push((kind.name(), baseline_tensor(&x, kind)?));
    }
    columns.push(("polyrelu", polyrelu_tensor(&x, &c)?));
    // normalization runs over the whole row
    columns.push(("polynorm", polynorm_tensor(&x, &c)?));

    for (name, _) in &columns {
        print!("{name:>10}");
    }
    println!();
    for i in 0..xs.len() {
        for (_, t) in &columns {
            print!("{:>10.4}", t.data()[i]);
        }
        println!();
    }
    Ok(())
}
