//! ReLU networks, piecewise-linear functions and polynomials rewritten as
//! PolyReLU networks of the same size.
//!
//! cargo run --example lift

use polycom::netconstruct::{lift_relu_to_polyrelu, poly_net, pwl_net, pwl_to_polyrelu, random_relu_net, Family, PiecewiseLinear};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let relu = random_relu_net(2, &[8, 8, 4], 7);
    let poly = lift_relu_to_polyrelu(&relu, 3)?;
    let mut worst: f64 = 0.0;
    for i in 0..=40 {
        for j in 0..=40 {
            let x = [i as f64 / 20.0 - 1.0, j as f64 / 20.0 - 1.0];
            worst = worst.max((relu.eval(&x)?[0] - poly.eval(&x)?[0]).abs());
        }
    }
    println!("ReLU net: size {} depth {}; PolyReLU lift: size {} depth {}; max gap {worst:.1e}",
        relu.size(), relu.depth(), poly.size(), poly.depth());

    let f = PiecewiseLinear::trapezoid();
    let (r, p) = (pwl_net(&f, Family::Relu)?, pwl_to_polyrelu(&f, 2)?);
    for x in [-2.5, -1.5, -1.0, 0.0, 1.25, 1.75, 3.0] {
        println!("trapezoid({x:>5}) = {:.3}  relu net {:.3}  polyrelu net {:.3}", f.eval(x), r.eval1(x), p.eval1(x));
    }

    // 1 - 2x + 0.5x^3 from two PolyReLU neurons
    let cubic = poly_net(&[1.0, -2.0, 0.0, 0.5])?;
    println!("cubic net: size {}, p(-1.5) = {}, p(2) = {}", cubic.size(), cubic.eval1(-1.5), cubic.eval1(2.0));
    Ok(())
}
