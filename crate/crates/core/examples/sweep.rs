//! Order sweep r = 2, 3, 4 for PolyReLU on a short run, printed as one
//! combined CSV.
//!
//! cargo run --release --example sweep [order|composition|relu-variants]

use polycom::activations::ActivationKind;
use polycom::trainer::sweep::sweep_csv;
use polycom::trainer::{run_sweep, synthetic_corpus, CharCorpus, SweepKind, TrainConfig, Warmup};
use polycom::transformer::TransformerConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind: SweepKind = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(SweepKind::Order);
    let corpus = CharCorpus::from_text(&synthetic_corpus(1 << 18, 2), 0.9)?;
    let cfg = TrainConfig {
        total_steps: 200,
        warmup: Warmup::Steps(20),
        eval_every: 50,
        eval_batches: 4,
        ..TrainConfig::default()
    };
    let base = TransformerConfig::toy(ActivationKind::PolyRelu, 2, 64, cfg.seq_len);
    let runs = run_sweep(kind, &base, &cfg, &corpus, None, |v, r| {
        eprintln!("{} step {} val {:.4}", v.label(), r.step, r.val_loss);
    })?;
    print!("{}", sweep_csv(&runs));
    Ok(())
}
