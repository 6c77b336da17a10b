//! Local Taylor approximation on a grid with a partition of unity, and its
//! exact PolyReLU network.
//!
//! cargo run --release --example taylor_grid

use std::f64::consts::PI;

use polycom::netconstruct::audit::scaled_sine;
use polycom::netconstruct::{error_bound, GridApproximator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // sin(pi x) / pi^3 keeps every derivative up to order 3 inside [-1, 1]
    for big_n in [2, 4, 8, 16] {
        let g = GridApproximator::build(&scaled_sine, 1, 3, big_n)?;
        let net = g.to_net();
        let mut err: f64 = 0.0;
        for i in 0..=2000 {
            let x = -1.0 + i as f64 / 1000.0;
            err = err.max((net.eval1(x) - (PI * x).sin() / PI.powi(3)).abs());
        }
        println!(
            "N = {big_n:>2}: {} grid points, net size {:>4} depth {}, error {err:.2e} (bound {:.2e})",
            g.points().len(),
            net.size(),
            net.depth(),
            error_bound(1, 3, big_n)
        );
    }
    Ok(())
}
