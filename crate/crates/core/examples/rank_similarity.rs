//! Effective rank of FFN weights and layer-wise cosine similarity, before
//! and after a short training run.
//!
//! cargo run --release --example rank_similarity

use polycom::activations::ActivationKind;
use polycom::analysis::{analyze_model, rank_csv, similarity_csv};
use polycom::trainer::{synthetic_corpus, train_loop, CharCorpus, TrainConfig};
use polycom::transformer::{Transformer, TransformerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = CharCorpus::from_text(&synthetic_corpus(1 << 17, 1), 0.9)?;
    let cfg = TrainConfig { total_steps: 150, eval_every: 150, ..TrainConfig::default() };
    for kind in [ActivationKind::Gelu, ActivationKind::PolyNorm] {
        let mut model = Transformer::new(TransformerConfig::toy(kind, 3, 32, cfg.seq_len), 0)?;
        let before = analyze_model(&model, &corpus.val, 4, 4, cfg.seq_len)?;
        train_loop(&mut model, &corpus, &cfg, |_| Ok(()))?;
        let after = analyze_model(&model, &corpus.val, 4, 4, cfg.seq_len)?;
        println!("== {kind} at init\n{}", rank_csv(&before.ranks));
        println!("== {kind} after {} steps\n{}{}", cfg.total_steps, rank_csv(&after.ranks), similarity_csv(&after.similarity));
    }
    Ok(())
}
