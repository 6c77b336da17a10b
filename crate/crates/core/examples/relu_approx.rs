//! ReLU networks approximating a PolyReLU unit and a whole PolyReLU network.
//!
//! cargo run --release --example relu_approx

use polycom::netconstruct::audit::{ln2_envelope, polyrelu_net_audit, polyrelu_rate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = [0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
    let eps = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    let rows = polyrelu_rate(&c, &eps)?;
    println!("single unit, coefficients {c:?}");
    for r in &rows {
        println!("  eps {:e}: size {:>4} depth {:>3} error {:.2e}", r.param, r.size, r.depth, r.measured_error);
    }
    let (k, ok) = ln2_envelope(&rows);
    println!("  size <= {k:.2} ln^2(1/eps) at every eps: {ok}");

    println!("depth-2 PolyReLU net (widths 4, 4) on [-1,1]^2");
    for r in polyrelu_net_audit(&[1e-1, 1e-2, 1e-3], 0)? {
        println!("  eps {:e}: size {:>5} depth {:>3} error {:.2e}", r.param, r.size, r.depth, r.measured_error);
    }
    Ok(())
}
