//! Exact x^n networks built from PolyReLU units of order 3, with the
//! neuron count growing like (log n)^2.
//!
//! cargo run --example power_net

use num_rational::BigRational;
use polycom::netconstruct::{power_net, Scalar};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>4} {:>6} {:>6}  {:>22}  {:>22}", "n", "size", "depth", "net(0.9)", "0.9^n");
    for n in [1, 2, 3, 5, 8, 9, 16, 27, 32, 64, 100] {
        let net = power_net(n, 3)?;
        println!("{n:>4} {:>6} {:>6}  {:>22.16e}  {:>22.16e}", net.size(), net.depth(), net.eval1(0.9), 0.9f64.powi(n as i32));
    }
    let x = BigRational::from_f64(0.75);
    let exact = power_net(13, 3)?.eval(&[x.clone()])?.swap_remove(0);
    println!("in exact arithmetic: net(3/4) = {exact}, (3/4)^13 = {}", num_traits::pow(x, 13));
    Ok(())
}
