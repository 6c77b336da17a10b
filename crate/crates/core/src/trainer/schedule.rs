use super::TrainConfig;

/// Linear warmup from 0 to `peak_lr`, then cosine decay to `min_lr` at
/// `total_steps`. Steps past the end stay at `min_lr`.
pub fn cosine_lr(step: usize, cfg: &TrainConfig) -> f64 {
    let warmup = cfg.warmup_steps();
    if step < warmup {
        return cfg.peak_lr * step as f64 / warmup as f64;
    }
    if cfg.total_steps <= warmup {
        return cfg.peak_lr;
    }
    let tau = ((step - warmup) as f64 / (cfg.total_steps - warmup) as f64).min(1.0);
    cfg.min_lr + (cfg.peak_lr - cfg.min_lr) * (1.0 + (std::f64::consts::PI * tau).cos()) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::Warmup;

    fn cfg() -> TrainConfig {
        TrainConfig {
            warmup: Warmup::Steps(100),
            total_steps: 1100,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn boundaries() {
        let c = cfg();
        assert_eq!(cosine_lr(0, &c), 0.0);
        assert!((cosine_lr(50, &c) - 1.5e-4).abs() < 1e-18);
        assert_eq!(cosine_lr(100, &c), 3e-4);
        assert!((cosine_lr(600, &c) - 1.65e-4).abs() < 1e-15);
        assert!((cosine_lr(1100, &c) - 3e-5).abs() < 1e-18);
        assert!((cosine_lr(5000, &c) - 3e-5).abs() < 1e-18);
    }

    #[test]
    fn monotone_after_warmup() {
        let c = cfg();
        let lrs: Vec<f64> = (100..=1100).map(|s| cosine_lr(s, &c)).collect();
        assert!(lrs.windows(2).all(|w| w[1] <= w[0]));
    }
}
