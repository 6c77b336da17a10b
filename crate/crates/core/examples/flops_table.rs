//! FLOPs and activation-memory table for one FFN at B=4, S=4096, H=1024.
//!
//! cargo run --example flops_table [H]

use polycom::analysis::{cost_csv, cost_table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1024);
    let rows = cost_table(4, 4096, h)?;
    print!("{}", cost_csv(&rows));
    for r in rows.iter().filter(|r| !r.checkpointing) {
        println!("{:>9}: {} MiB of stored activations", r.kind, r.memory_mib());
    }
    Ok(())
}
