//! Acceptance run: one PASS/FAIL line per criterion, with the measured
//! quantities and runtime. Set `POLYCOM_ACCEPT=1,3,6` to run a subset.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use polycom::activations::{polynorm, polyrelu, ActivationKind};
use polycom::analysis::{activation_cost, effective_rank, CostKind, Exact};
use polycom::netconstruct::audit::{grid_rate, ln2_envelope, loglog_slope};
use polycom::netconstruct::{
    error_bound, lift_relu_to_polyrelu, polyrelu_lipschitz, power_net, random_normalized_polyrelu_net,
    random_relu_net, relu_approx_polyrelu, relu_approx_polyrelu_net, Act, GridApproximator, LayeredNet, Scalar,
};
use polycom::tensor::{finite_diff_grad, relative_error, Tape, Tensor};
use polycom::trainer::sweep::{run_sweep, SweepKind, SWEEP_CSV_HEADER};
use polycom::trainer::{synthetic_corpus, train_loop, CharCorpus, TrainConfig, CSV_HEADER};
use polycom::transformer::{Transformer, TransformerConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- 1

fn gradient_fidelity() -> Outcome {
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for kind in [ActivationKind::PolyRelu, ActivationKind::PolyNorm] {
        for r in 2..=4 {
            for _ in 0..100 {
                // PolyReLU: stay 1e-3 away from the kink at 0
                let x0: Vec<f64> = (0..8)
                    .map(|_| loop {
                        let v: f64 = rng.sample(StandardNormal);
                        if kind != ActivationKind::PolyRelu || v.abs() > 1e-3 {
                            break v;
                        }
                    })
                    .collect();
                let x0 = Tensor::new(vec![1, 8], x0).unwrap();
                let c0 = Tensor::new(vec![r + 1], (0..=r).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
                let w = Tensor::new(vec![1, 8], (0..8).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
                let f = |x: &Tensor, c: &Tensor| -> f64 {
                    let t = Tape::new();
                    let (x, c, w) = (t.constant(x.clone()), t.constant(c.clone()), t.constant(w.clone()));
                    let y = match kind {
                        ActivationKind::PolyRelu => polyrelu(&x, &c).unwrap(),
                        _ => polynorm(&x, &c, 1e-6).unwrap(),
                    };
                    y.mul(&w).unwrap().sum().unwrap().value().item().unwrap()
                };
                let tape = Tape::new();
                let (xv, cv, wv) = (tape.leaf(x0.clone()), tape.leaf(c0.clone()), tape.constant(w.clone()));
                let y = match kind {
                    ActivationKind::PolyRelu => polyrelu(&xv, &cv).unwrap(),
                    _ => polynorm(&xv, &cv, 1e-6).unwrap(),
                };
                y.mul(&wv).unwrap().sum().unwrap().backward().unwrap();
                let fd_x = finite_diff_grad(|x| Ok(f(x, &c0)), &x0, h).unwrap();
                let fd_c = finite_diff_grad(|c| Ok(f(&x0, c)), &c0, h).unwrap();
                for (g, fd) in [(xv.grad().unwrap(), fd_x), (cv.grad().unwrap(), fd_c)] {
                    for (a, b) in g.data().iter().zip(fd.data()) {
                        worst = worst.max(relative_error(*a, *b));
                        checked += 1;
                    }
                }
            }
        }
    }
    outcome(worst < 1e-4, format!("{checked} partials, max relative error {worst:.2e} (< 1e-4)"))
}

// ---------------------------------------------------------------- 2

/// Forward pass written out independently of `LayeredNet::eval`.
fn reference_eval(net: &LayeredNet, x: &[f64]) -> f64 {
    let mut h = x.to_vec();
    for layer in net.layers() {
        h = layer
            .rows
            .iter()
            .zip(&layer.bias)
            .zip(&layer.acts)
            .map(|((row, b), act)| {
                let z: f64 = b + row.iter().map(|&(j, w)| w * h[j]).sum::<f64>();
                match act {
                    Act::Identity => z,
                    Act::Relu => z.max(0.0),
                    Act::PolyRelu(c) => c.iter().enumerate().map(|(i, a)| a * z.max(0.0).powi(i as i32)).sum(),
                }
            })
            .collect();
    }
    h[0]
}

fn lift_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut sizes_equal = true;
    for seed in 0..20 {
        let d = rng.random_range(1..=3);
        let hidden: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(1..=8)).collect();
        let relu = random_relu_net(d, &hidden, seed);
        let poly = lift_relu_to_polyrelu(&relu, 3).unwrap();
        sizes_equal &= poly.size() == relu.size() && poly.depth() == relu.depth() && relu.depth() <= 4;
        for _ in 0..1000 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
            worst = worst.max((reference_eval(&relu, &x) - poly.eval(&x).unwrap()[0]).abs());
        }
    }
    outcome(
        worst < 1e-12 && sizes_equal,
        format!("20 nets x 1000 inputs, max |f - g| = {worst:.1e}, sizes equal: {sizes_equal}"),
    )
}

// ---------------------------------------------------------------- 3

fn power_networks() -> Outcome {
    let xs: Vec<f64> = (0..100).map(|i| -1.0 + (2 * i + 1) as f64 / 100.0).collect();
    let mut worst_rel: f64 = 0.0;
    let mut worst_f64: f64 = 0.0;
    let mut sizes = Vec::new();
    for n in 1..=32u32 {
        let net = power_net(n, 3).unwrap();
        for &x in &xs {
            let xr = BigRational::from_f64(x);
            let want = num_traits::pow(xr.clone(), n as usize);
            let got = net.eval(&[xr]).unwrap().swap_remove(0);
            let rel = ((got - &want) / &want).abs().to_f64().unwrap();
            worst_rel = worst_rel.max(rel);
            worst_f64 = worst_f64.max((net.eval1(x) - x.powi(n as i32)).abs());
        }
        let k = (n as f64).log(3.0).floor() as usize + 1;
        // guard floating log at exact powers of three
        let k = if 3usize.pow(k as u32) <= n as usize { k + 1 } else { k };
        sizes.push((n, k, net.size()));
    }
    let c = sizes
        .iter()
        .filter(|s| s.0 <= 8)
        .map(|&(_, k, s)| s as f64 / (k * k) as f64)
        .fold(0.0, f64::max);
    let envelope_ok = sizes.iter().all(|&(_, k, s)| s as f64 <= c * (k * k) as f64);
    outcome(
        worst_rel <= 1e-12 && envelope_ok,
        format!(
            "n = 1..32: max relative error {worst_rel:.1e} (exact arithmetic), f64 max abs error {worst_f64:.1e}; \
             C = {c:.2} fitted on n <= 8 bounds all sizes: {envelope_ok} (size at n=32: {})",
            sizes[31].2
        ),
    )
}

// ---------------------------------------------------------------- 4

fn polyrelu_value(c: &[f64], x: f64) -> f64 {
    let t = x.max(0.0);
    c.iter().enumerate().map(|(i, a)| a * t.powi(i as i32)).sum()
}

fn relu_approximations() -> Outcome {
    let c = [0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
    let mut rows = Vec::new();
    let mut meets = true;
    let mut text = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let net = relu_approx_polyrelu(&c, eps).unwrap();
        let err = (0..=10_000)
            .map(|i| {
                let x = -1.0 + i as f64 / 5000.0;
                (net.eval1(x) - polyrelu_value(&c, x)).abs()
            })
            .fold(0.0, f64::max);
        meets &= err <= eps;
        text.push(format!("eps {eps:e}: err {err:.1e} size {}", net.size()));
        rows.push(polycom::netconstruct::AuditRow {
            param: eps,
            size: net.size(),
            depth: net.depth(),
            params: net.params(),
            measured_error: err,
        });
    }
    let (cfit, envelope) = ln2_envelope(&rows);

    let net = random_normalized_polyrelu_net(2, &[4, 4], 3, 4);
    let alpha = net
        .layers()
        .iter()
        .flat_map(|l| &l.acts)
        .map(|a| match a {
            Act::PolyRelu(c) => polyrelu_lipschitz(c),
            _ => 0.0,
        })
        .fold(0.0, f64::max);
    let relu = relu_approx_polyrelu_net(&net, 0.05, alpha).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut net_err: f64 = 0.0;
    for _ in 0..10_000 {
        let x = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        // reference forward pass of the PolyReLU net
        let mut hdn = x.to_vec();
        for layer in net.layers() {
            hdn = layer
                .rows
                .iter()
                .zip(&layer.bias)
                .zip(&layer.acts)
                .map(|((row, b), act)| {
                    let z = b + row.iter().map(|&(j, w)| w * hdn[j]).sum::<f64>();
                    let Act::PolyRelu(c) = act else { unreachable!() };
                    polyrelu_value(c, z)
                })
                .collect();
        }
        for (a, b) in relu.eval(&x).unwrap().iter().zip(&hdn) {
            net_err = net_err.max((a - b).abs());
        }
    }
    outcome(
        meets && envelope && net_err <= 0.05,
        format!(
            "{}; ln^2 envelope c = {cfit:.2} holds: {envelope}; depth-2 net (alpha {alpha:.3}) err {net_err:.2e} <= 0.05, size {}",
            text.join(", "),
            relu.size()
        ),
    )
}

// ---------------------------------------------------------------- 5

fn sine(x: &[f64], a: &[usize]) -> f64 {
    let t = PI * x[0];
    let base = match a[0] % 4 {
        0 => t.sin(),
        1 => t.cos(),
        2 => -t.sin(),
        _ => -t.cos(),
    };
    base * PI.powi(a[0] as i32 - 3)
}

fn sine2(x: &[f64], a: &[usize]) -> f64 {
    sine(&x[..1], &a[..1]) * sine(&x[1..], &a[1..]) * PI.powi(3)
}

fn taylor_grid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g1 = GridApproximator::build(&sine, 1, 3, 4).unwrap();
    let g2 = GridApproximator::build(&sine2, 2, 3, 4).unwrap();
    let mut pou: f64 = 0.0;
    for _ in 0..1000 {
        let x = rng.random_range(-1.0..=1.0);
        let y = rng.random_range(-1.0..=1.0);
        pou = pou.max((g1.partition_sum(&[x]) - 1.0).abs());
        pou = pou.max((g2.partition_sum(&[x, y]) - 1.0).abs());
    }
    let mut bound_ok = true;
    let mut parts = Vec::new();
    for big_n in [2, 4, 8] {
        let g = GridApproximator::build(&sine, 1, 3, big_n).unwrap();
        let net = g.to_net();
        let mut err: f64 = 0.0;
        for i in 0..=10_000 {
            let x = -1.0 + i as f64 / 5000.0;
            let want = (PI * x).sin() / PI.powi(3);
            err = err.max((g.eval(&[x]).unwrap() - want).abs());
            err = err.max((net.eval1(x) - want).abs());
        }
        let b = error_bound(1, 3, big_n);
        bound_ok &= err <= b;
        parts.push(format!("N={big_n}: {err:.2e} <= {b:.2e}"));
    }
    let r1 = grid_rate(1, 3, &[1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9]).unwrap();
    let r2 = grid_rate(2, 3, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
    let (s1, s2) = (loglog_slope(&r1), loglog_slope(&r2));
    let within = |s: f64, target: f64| (s - target).abs() <= 0.25 * target.abs();
    let eps_ok = r1.iter().chain(&r2).all(|r| r.measured_error <= r.param);
    let slopes_ok = within(s1, -1.0 / 3.0) && within(s2, -2.0 / 3.0);
    outcome(
        pou < 1e-12 && bound_ok && slopes_ok && eps_ok,
        format!(
            "partition of unity max dev {pou:.1e}; {}; size slopes d=1 {s1:.3} (target -0.333), d=2 {s2:.3} (target -0.667); \
             every audited eps met: {eps_ok}",
            parts.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 6

fn golden_tables() -> Outcome {
    // (kind, ckpt, intermediate, flops, ratio num/den multiple of 1/H, percent, memory text, MiB)
    type Row = (CostKind, bool, &'static str, &'static str, (i128, i128), &'static str, &'static str, i128);
    let h = 1024i128;
    let rows: [Row; 12] = [
        (CostKind::Relu, false, "4H", "4BSH", (1, 6), "0.016%", "4BSH", 128),
        (CostKind::Gelu, false, "4H", "72BSH", (3, 1), "0.29%", "10BSH", 320),
        (CostKind::SwiGlu, false, "8/3H", "112/3BSH", (14, 9), "0.15%", "8BSH", 256),
        (CostKind::ReluSquared, false, "4H", "8BSH", (1, 3), "0.032%", "8BSH", 256),
        (CostKind::PolyNorm, false, "4H", "72BSH", (3, 1), "0.29%", "12BSH", 384),
        (CostKind::PolyReLU, false, "4H", "40BSH", (5, 3), "0.16%", "8BSH", 256),
        (CostKind::Relu, true, "4H", "8BSH", (1, 3), "0.033%", "0", 0),
        (CostKind::Gelu, true, "4H", "144BSH", (6, 1), "0.59%", "0", 0),
        (CostKind::SwiGlu, true, "8/3H", "224/3BSH", (28, 9), "0.30%", "0", 0),
        (CostKind::ReluSquared, true, "4H", "16BSH", (2, 3), "0.065%", "0", 0),
        (CostKind::PolyNorm, true, "4H", "144BSH", (6, 1), "0.59%", "0", 0),
        (CostKind::PolyReLU, true, "4H", "80BSH", (10, 3), "0.33%", "0", 0),
    ];
    let mut exact_cells = 0;
    let mut mismatches = Vec::new();
    let mut percent_notes = Vec::new();
    for (kind, ckpt, inter, flops, (num, den), pct, mem, mib) in rows {
        let r = activation_cost(kind, 4, 4096, 1024, ckpt).unwrap();
        let checks = [
            (r.intermediate_text() == inter, "intermediate"),
            (r.flops_text() == flops, "flops"),
            (r.flops_ratio == Exact::new(num, den * h), "ratio"),
            (r.memory_text() == mem, "memory"),
            (r.memory_overhead_bytes == mib * 1024 * 1024, "bytes"),
        ];
        for (ok, what) in checks {
            if ok {
                exact_cells += 1;
            } else {
                mismatches.push(format!("{kind:?}/{ckpt}/{what}"));
            }
        }
        if r.ratio_percent_text() != pct {
            percent_notes.push(format!(
                "{}{}: {} printed as {pct} in the table",
                kind.name(),
                if ckpt { " (ckpt)" } else { "" },
                r.ratio_percent_text()
            ));
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{exact_cells}/60 exact cells (intermediate, FLOPs, rational ratio, memory, bytes); mismatches: {:?}; \
             percent renderings differing from the table: {:?}",
            mismatches, percent_notes
        ),
    )
}

// ---------------------------------------------------------------- 7

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

fn erank(m: &DMatrix<f64>) -> f64 {
    // nalgebra is column-major; the analysis takes row-major data
    let data: Vec<f64> = m.transpose().iter().copied().collect();
    effective_rank(&Tensor::new(vec![m.nrows(), m.ncols()], data).unwrap()).unwrap()
}

fn effective_rank_checks() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [1, 2, 5, 16] {
        let e = erank(&DMatrix::identity(n, n));
        ok &= (e - n as f64).abs() < 1e-9;
    }
    let u = DMatrix::from_fn(6, 1, |i, _| (i + 1) as f64);
    let v = DMatrix::from_fn(1, 4, |_, j| 1.0 - j as f64 * 0.3);
    let rank1 = erank(&(u * v));
    ok &= (rank1 - 1.0).abs() < 1e-9;
    let diag = erank(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 1.0])));
    ok &= (diag - 2f64.powf(1.5)).abs() < 1e-9;
    notes.push(format!("rank-1 {rank1:.12}, diag(2,1,1) {diag:.12} vs {:.12}", 2f64.powf(1.5)));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut sv_worst: f64 = 0.0;
    for _ in 0..5 {
        let a = random_matrix(&mut rng, 32);
        let q = random_matrix(&mut rng, 32).qr().q();
        let p = random_matrix(&mut rng, 32).qr().q();
        let base = erank(&a);
        for other in [&q * &a, &a * &p, &q * &a * &p, &a * 3.7, &a * 1e-3] {
            worst = worst.max((erank(&other) - base).abs());
        }
        // singular values against an independent SVD
        let data: Vec<f64> = a.transpose().iter().copied().collect();
        let ours = polycom::analysis::svd::singular_values(&data, 32, 32);
        let mut theirs: Vec<f64> = a.singular_values().iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in ours.iter().zip(&theirs) {
            sv_worst = sv_worst.max((x - y).abs() / theirs[0]);
        }
    }
    ok &= worst < 1e-9 && sv_worst < 1e-10;
    notes.push(format!("invariance max dev {worst:.1e}, singular values vs reference {sv_worst:.1e}"));
    outcome(ok, notes.join("; "))
}

// ---------------------------------------------------------------- 8

fn training_stability() -> Outcome {
    let corpus = CharCorpus::from_text(&synthetic_corpus(1 << 20, 8), 0.9).unwrap();
    let cfg = TrainConfig {
        total_steps: 2000,
        seq_len: 32,
        batch_size: 8,
        seed: 8,
        ..TrainConfig::default()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [
        ActivationKind::Relu,
        ActivationKind::ReluSquared,
        ActivationKind::Gelu,
        ActivationKind::SwiGlu,
        ActivationKind::PolyRelu,
        ActivationKind::PolyNorm,
    ] {
        let t0 = Instant::now();
        let mc = TransformerConfig::toy(kind, 2, 64, 32);
        let run = || {
            let mut model = Transformer::new(mc.clone(), cfg.seed).unwrap();
            let out = train_loop(&mut model, &corpus, &cfg, |_| Ok(()));
            (model, out)
        };
        let (m1, o1) = run();
        let first_secs = t0.elapsed().as_secs_f64();
        let (m2, o2) = run();
        let secs = t0.elapsed().as_secs_f64();
        let (o1, o2) = match (o1, o2) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                ok = false;
                parts.push(format!("{kind}: {e}"));
                continue;
            }
        };
        let bits = |o: &polycom::trainer::TrainOutcome| o.step_losses.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        let identical = bits(&o1) == bits(&o2) && m1 == m2;
        let finite = o1.step_losses.iter().chain(&o1.grad_norms).all(|v| v.is_finite());
        let start = o1.records[0].val_loss;
        let last = o1.final_record();
        let fin = last.train_loss.unwrap_or(f64::NAN);
        // normalized final state times N(0, s^2) head: logit variance H s^2,
        // expected cross-entropy about ln V + H s^2 / 2
        let expected_start = (mc.vocab_size as f64).ln() + 0.5 * mc.d_model as f64 * mc.init_std().powi(2);
        let pass = identical && finite && fin < 3.0 && (start - expected_start).abs() < 0.25 && first_secs < 900.0;
        ok &= pass;
        parts.push(format!(
            "{kind}: start {start:.3} (expected {expected_start:.3}) -> train {fin:.3} / val {:.3}, rerun identical {identical}, {first_secs:.0}s per run",
            last.val_loss
        ));
        eprintln!("  8. {} ({secs:.0}s for both runs)", parts.last().expect("pushed"));
    }
    outcome(ok, parts.join("; "))
}

// ---------------------------------------------------------------- 9

fn ablation_harness() -> Outcome {
    let corpus = CharCorpus::from_text(&synthetic_corpus(1 << 18, 9), 0.9).unwrap();
    let base = TransformerConfig::toy(ActivationKind::PolyRelu, 2, 64, 32);
    let cfg = TrainConfig {
        total_steps: 200,
        warmup: polycom::trainer::Warmup::Steps(20),
        seq_len: 32,
        eval_every: 50,
        eval_batches: 4,
        seed: 9,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [SweepKind::Order, SweepKind::Composition] {
        let sub = dir.path().join(kind.name());
        std::fs::create_dir_all(&sub).unwrap();
        let runs = match run_sweep(kind, &base, &cfg, &corpus, Some(&sub), |_, _| {}) {
            Ok(r) => r,
            Err(e) => {
                ok = false;
                parts.push(format!("{kind}: {e}"));
                continue;
            }
        };
        let steps: Vec<Vec<usize>> = runs.iter().map(|r| r.records.iter().map(|m| m.step).collect()).collect();
        let aligned = steps.windows(2).all(|w| w[0] == w[1]) && steps[0] == vec![0, 50, 100, 150, 200];
        let mut csv_ok = true;
        for r in &runs {
            let text = std::fs::read_to_string(sub.join(r.variant.label()).join("metrics.csv")).unwrap_or_default();
            csv_ok &= text.lines().next() == Some(CSV_HEADER) && text.lines().count() == 1 + steps[0].len();
        }
        let combined = std::fs::read_to_string(sub.join(format!("sweep_{}.csv", kind.name()))).unwrap_or_default();
        csv_ok &= combined.lines().next() == Some(SWEEP_CSV_HEADER);
        let finite = runs.iter().all(|r| r.final_train_loss.is_finite());
        ok &= aligned && csv_ok && finite;
        let losses: Vec<String> = runs
            .iter()
            .map(|r| format!("{} {:.3}", r.variant.label(), r.final_train_loss))
            .collect();
        parts.push(format!("{kind}: [{}], aligned {aligned}, csv {csv_ok}", losses.join(", ")));
    }
    outcome(ok, parts.join("; "))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("POLYCOM_ACCEPT")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let criteria: [(usize, &str, f64, fn() -> Outcome); 9] = [
        (1, "gradient fidelity (PolyReLU/PolyNorm, r=2..4)", 10.0, gradient_fidelity),
        (2, "ReLU -> PolyReLU lift is exact", 5.0, lift_exactness),
        (3, "power networks x^n exact, size envelope", 5.0, power_networks),
        (4, "ReLU approximation of PolyReLU units and nets", 60.0, relu_approximations),
        (5, "partition of unity, Taylor grid bound and rate", 120.0, taylor_grid),
        (6, "FLOPs / memory golden tables", f64::INFINITY, golden_tables),
        (7, "effective rank identities and invariances", f64::INFINITY, effective_rank_checks),
        (8, "training stability of six activations, bitwise reruns", 6.0 * 2.0 * 900.0, training_stability),
        (9, "order and composition sweeps emit comparable CSVs", f64::INFINITY, ablation_harness),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let t0 = Instant::now();
        let out = f();
        let secs = t0.elapsed().as_secs_f64();
        let pass = out.pass && secs < budget;
        let budget_text = if budget.is_finite() { format!(", budget {budget:.0}s") } else { String::new() };
        println!(
            "[{}] {id}. {name} :: {} ({secs:.1}s{budget_text})",
            if pass { "PASS" } else { "FAIL" },
            out.detail
        );
        if !pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
