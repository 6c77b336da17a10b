use polycom::activations::ActivationKind;
use polycom::analysis::{analyze_model, rank_csv, similarity_csv};
use polycom::trainer::{encode, synthetic_corpus, train_loop, CharCorpus, TrainConfig, Warmup};
use polycom::transformer::{load_checkpoint, save_checkpoint, Transformer, TransformerConfig};

fn tiny_cfg(steps: usize) -> TrainConfig {
    TrainConfig {
        total_steps: steps,
        warmup: Warmup::Steps(2),
        batch_size: 2,
        seq_len: 8,
        eval_every: 5,
        eval_batches: 2,
        seed: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn every_activation_trains_and_roundtrips() {
    let text = synthetic_corpus(30_000, 1);
    let corpus = CharCorpus::from_text(&text, 0.9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for kind in [
        ActivationKind::Relu,
        ActivationKind::ReluSquared,
        ActivationKind::Gelu,
        ActivationKind::SwiGlu,
        ActivationKind::PolyRelu,
        ActivationKind::PolyNorm,
    ] {
        let mut model = Transformer::new(TransformerConfig::toy(kind, 2, 16, 8), 3).unwrap();
        let out = train_loop(&mut model, &corpus, &tiny_cfg(10), |_| Ok(())).unwrap();
        assert_eq!(out.step_losses.len(), 10);
        assert!(out.step_losses.iter().all(|l| l.is_finite()), "{kind}");
        let steps: Vec<usize> = out.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, [0, 5, 10]);

        let stem = dir.path().join(kind.name());
        save_checkpoint(&model, &stem).unwrap();
        let back = load_checkpoint(&stem).unwrap();
        assert_eq!(back, model);

        let a = analyze_model(&back, &encode(&text[..4000]), 2, 2, 8).unwrap();
        assert_eq!(rank_csv(&a.ranks).lines().count(), 1 + 2 * 2);
        assert!(a.ranks.iter().all(|r| r.effective_rank >= 1.0 - 1e-9 && r.effective_rank <= r.full_rank as f64 + 1e-9));
        assert_eq!(similarity_csv(&a.similarity).lines().count(), 3);
    }
}

#[test]
fn same_seed_is_bitwise_reproducible() {
    let corpus = CharCorpus::from_text(&synthetic_corpus(20_000, 2), 0.9).unwrap();
    let cfg = TransformerConfig::toy(ActivationKind::PolyRelu, 1, 16, 8);
    let run = || {
        let mut m = Transformer::new(cfg.clone(), 5).unwrap();
        let o = train_loop(&mut m, &corpus, &tiny_cfg(7), |_| Ok(())).unwrap();
        (m, o.step_losses.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
    };
    assert_eq!(run(), run());
}
