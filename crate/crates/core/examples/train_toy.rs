//! Train a 2-layer byte-level PolyReLU transformer for a few hundred steps
//! on a synthetic corpus.
//!
//! cargo run --release --example train_toy [steps] [activation]

use polycom::activations::ActivationKind;
use polycom::trainer::{synthetic_corpus, train_loop, CharCorpus, TrainConfig, Warmup};
use polycom::transformer::{Transformer, TransformerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(300);
    let kind: ActivationKind = args.next().map(|s| s.parse()).transpose()?.unwrap_or(ActivationKind::PolyRelu);

    let corpus = CharCorpus::from_text(&synthetic_corpus(1 << 18, 0), 0.9)?;
    let cfg = TrainConfig {
        total_steps: steps,
        warmup: Warmup::Steps(steps / 20),
        eval_every: (steps / 6).max(1),
        ..TrainConfig::default()
    };
    let mut model = Transformer::new(TransformerConfig::toy(kind, 2, 64, cfg.seq_len), cfg.seed)?;
    println!("{kind}: {} parameters, FFN width {}", model.num_params(), model.config().intermediate_size());
    let out = train_loop(&mut model, &corpus, &cfg, |r| {
        println!(
            "step {:>5}  train {:>7}  val {:.4}  ppl {:>7.2}  lr {:.2e}",
            r.step,
            r.train_loss.map_or("-".into(), |l| format!("{l:.4}")),
            r.val_loss,
            r.val_ppl,
            r.lr
        );
        Ok(())
    })?;
    if let Some(c) = model.coeffs(0) {
        println!("layer 0 coefficients after training: {:?}", c.data());
    }
    println!("final train loss {:.4}", out.final_record().train_loss.unwrap_or(f64::NAN));
    Ok(())
}
