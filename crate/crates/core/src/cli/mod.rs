//! `polycom` command line: `train`, `analyze`, `theory` and `flops`.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a run
//! aborts on a non-finite value. Output goes under `$POLYCOM_OUT`
//! (default `runs/`) unless `--out` names a directory.

mod config;
mod manifest;

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

pub use config::{load_file_config, DataSection, FileConfig, ModelSection};
pub use manifest::{content_hash, RunManifest};

use crate::activations::{ActivationKind, PolyCoeffs};
use crate::analysis::{activation_cost, analyze_model, cost_csv, cost_table, rank_csv, similarity_csv, AnalysisError, CostKind};
use crate::netconstruct::{run_audit, Audit, AuditOptions, NetError};
use crate::tensor::TensorError;
use crate::trainer::{
    run_sweep, synthetic_corpus, train_loop, CharCorpus, MetricsWriter, SweepKind, TrainError, Warmup,
};
use crate::transformer::{load_checkpoint, save_checkpoint, Transformer, TransformerError};

pub const OUT_ENV: &str = "POLYCOM_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] TransformerError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let tensor_nan = |e: &TransformerError| matches!(e, TransformerError::Tensor(TensorError::NonFinite { .. }));
        match self {
            CliError::Train(TrainError::NonFinite { .. } | TrainError::NonFiniteGrad(_)) => 2,
            CliError::Train(TrainError::Model(e)) | CliError::Model(e) if tensor_nan(e) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "polycom", version, about = "PolyReLU/PolyNorm activations: training, analysis, constructions and cost tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a byte-level transformer, or a sweep of variants.
    Train(TrainArgs),
    /// Effective ranks and layer similarity of a checkpoint.
    Analyze(AnalyzeArgs),
    /// Size/error audits of the network constructions.
    Theory(TheoryArgs),
    /// FLOPs and activation memory of one FFN.
    Flops(FlopsArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Text file used as the byte-level corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Generate a synthetic corpus of this many bytes instead.
    #[arg(long, value_name = "BYTES")]
    pub synthetic: Option<usize>,
    /// Training fraction of the corpus.
    #[arg(long)]
    pub split: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML file with [model], [train] and [data] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: CorpusArgs,
    #[arg(long)]
    pub activation: Option<ActivationKind>,
    /// Polynomial order for PolyReLU/PolyNorm.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub context: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub min_lr: Option<f64>,
    /// Warmup length in steps.
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seq_len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub eval_batches: Option<usize>,
    /// Run an ablation sweep (order, composition, relu-variants) instead of one model.
    #[arg(long)]
    pub sweep: Option<SweepKind>,
    /// Run directory; defaults to a name derived from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress per-record progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Checkpoint stem (path without the .json/.bin extension).
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: CorpusArgs,
    /// Number of evaluation windows.
    #[arg(long, default_value_t = 8)]
    pub batches: usize,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    /// Window length; defaults to the model context length.
    #[arg(long)]
    pub seq_len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// square-rate, polyrelu-rate, polyrelu-net, power-rate or grid-rate.
    pub audit: String,
    /// Comma-separated tolerances.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Input dimension for grid-rate (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Smoothness for grid-rate, activation order for power-rate.
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Largest exponent for power-rate.
    #[arg(long, default_value_t = 32)]
    pub max_n: u32,
    /// PolyReLU coefficients for polyrelu-rate, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlopsArgs {
    /// One activation (relu, gelu, swiglu, relu2, polynorm, polyrelu); all when omitted.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long = "B", visible_alias = "batch", default_value_t = 4)]
    pub batch: u64,
    #[arg(long = "S", visible_alias = "seq", default_value_t = 4096)]
    pub seq: u64,
    #[arg(long = "H", visible_alias = "hidden", default_value_t = 1024)]
    pub hidden: u64,
    /// With gradient checkpointing.
    #[arg(long)]
    pub ckpt: bool,
    /// Both checkpointing settings.
    #[arg(long, conflicts_with = "ckpt")]
    pub all: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Flops(a) => cmd_flops(a),
    }
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

fn run_dir(out: Option<PathBuf>, default_name: String) -> PathBuf {
    out.unwrap_or_else(|| out_root().join(default_name))
}

/// Corpus text plus the bytes it came from.
fn load_corpus(data: &DataSection, seed: u64) -> Result<(String, Vec<u8>), CliError> {
    match (&data.corpus, data.synthetic_bytes) {
        (Some(path), _) => {
            let bytes = fs::read(path)
                .map_err(|e| CliError::Usage(format!("--corpus: cannot read {}: {e}", path.display())))?;
            Ok((String::from_utf8_lossy(&bytes).into_owned(), bytes))
        }
        (None, Some(n)) => {
            let text = synthetic_corpus(n, seed);
            let bytes = text.as_bytes().to_vec();
            Ok((text, bytes))
        }
        (None, None) => Err(CliError::Usage(
            "no corpus given: pass --corpus <path> (or --synthetic <bytes>)".into(),
        )),
    }
}

fn merge_data(data: &mut DataSection, args: &CorpusArgs) {
    if let Some(p) = &args.corpus {
        data.corpus = Some(p.clone());
        data.synthetic_bytes = None;
    }
    if let Some(n) = args.synthetic {
        data.synthetic_bytes = Some(n);
        if args.corpus.is_none() {
            data.corpus = None;
        }
    }
    if let Some(s) = args.split {
        data.split = s;
    }
}

fn resolve_train(a: &TrainArgs) -> Result<FileConfig, CliError> {
    let mut cfg = match &a.config {
        Some(p) => load_file_config(p)?,
        None => FileConfig::default(),
    };
    merge_data(&mut cfg.data, &a.data);
    let m = &mut cfg.model;
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src {
                $dst = v;
            }
        };
    }
    set!(m.activation, a.activation.map(Some));
    set!(m.poly_order, a.order.map(Some));
    set!(m.n_layers, a.layers.map(Some));
    set!(m.d_model, a.d_model.map(Some));
    set!(m.n_heads, a.heads.map(Some));
    set!(m.context_length, a.context.map(Some));
    let t = &mut cfg.train;
    set!(t.total_steps, a.steps);
    set!(t.peak_lr, a.lr);
    set!(t.min_lr, a.min_lr);
    set!(t.warmup, a.warmup.map(Warmup::Steps));
    set!(t.weight_decay, a.weight_decay);
    set!(t.batch_size, a.batch);
    set!(t.seq_len, a.seq_len);
    set!(t.seed, a.seed);
    set!(t.eval_every, a.eval_every);
    set!(t.eval_batches, a.eval_batches);
    Ok(cfg)
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let mut cfg = resolve_train(&a)?;
    cfg.train.validate()?;
    let mc = cfg.model.resolve(cfg.train.seq_len);
    mc.validate()?;
    cfg.model = ModelSection::from_resolved(&mc);
    let seed = cfg.train.seed;
    let (text, bytes) = load_corpus(&cfg.data, seed)?;
    let config_json = serde_json::to_value(&cfg)?;

    let name = match a.sweep {
        Some(k) => format!("sweep-{k}-s{seed}"),
        None => {
            let v = crate::trainer::SweepVariant {
                activation: mc.activation,
                order: mc.poly_order,
            };
            format!("train-{}-s{seed}", v.label())
        }
    };
    let dir = run_dir(a.out.clone(), name);
    let mut extra = serde_json::Map::new();
    extra.insert("intermediate_size".into(), json!(mc.intermediate_size()));
    extra.insert("baseline_intermediate_size".into(), json!(mc.baseline_intermediate_size()));
    extra.insert("num_params".into(), json!(mc.num_params()));
    if mc.activation.has_coeffs() {
        let init = PolyCoeffs::init(mc.poly_order).map_err(|e| CliError::Usage(e.to_string()))?;
        extra.insert("poly_coeffs_init".into(), json!(init.coeffs()));
    }
    if let Some(k) = a.sweep {
        extra.insert("sweep".into(), json!(k.name()));
    }
    let manifest = RunManifest {
        command: "train".into(),
        config: config_json.clone(),
        seed,
        input_hash: content_hash([bytes.as_slice(), config_json.to_string().as_bytes()]),
        out_dir: dir.clone(),
        extra,
    };
    manifest.write()?;

    let corpus = CharCorpus::from_text(&text, cfg.data.split)?;
    let quiet = a.quiet;
    let report = |label: &str, r: &crate::trainer::MetricsRecord| {
        if !quiet {
            let tl = r.train_loss.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
            eprintln!("[{label}] step {:>5}  train {tl}  val {:.4}  lr {:.2e}", r.step, r.val_loss, r.lr);
        }
    };

    if let Some(kind) = a.sweep {
        let runs = run_sweep(kind, &mc, &cfg.train, &corpus, Some(&dir), |v, r| report(&v.label(), r))?;
        for r in &runs {
            println!("{}\tfinal train loss {:.4}", r.variant.label(), r.final_train_loss);
        }
    } else {
        let mut model = Transformer::new(mc, seed)?;
        let mut writer = MetricsWriter::create(&dir.join("metrics.jsonl"), &dir.join("metrics.csv"))?;
        let label = name_of(&dir);
        let outcome = train_loop(&mut model, &corpus, &cfg.train, |r| {
            report(&label, r);
            writer.write(r)
        })?;
        save_checkpoint(&model, &dir.join("checkpoint"))?;
        let last = outcome.final_record();
        println!(
            "step {} train loss {} val loss {:.4} val ppl {:.3}",
            last.step,
            last.train_loss.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            last.val_loss,
            last.val_ppl
        );
    }
    println!("{}", dir.display());
    Ok(())
}

fn name_of(dir: &Path) -> String {
    dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<(), CliError> {
    let json_path = a.checkpoint.with_extension("json");
    let ckpt_bytes = fs::read(&json_path)
        .map_err(|e| CliError::Usage(format!("--checkpoint: cannot read {}: {e}", json_path.display())))?;
    let mut data = DataSection::default();
    merge_data(&mut data, &a.data);
    let (_, corpus_bytes) = load_corpus(&data, a.seed)?;
    let dir = run_dir(a.out.clone(), format!("analyze-{}", name_of(&a.checkpoint)));
    let config = json!({
        "checkpoint": a.checkpoint,
        "data": data,
        "batches": a.batches,
        "batch": a.batch,
        "seq_len": a.seq_len,
    });
    RunManifest {
        command: "analyze".into(),
        config,
        seed: a.seed,
        input_hash: content_hash([ckpt_bytes.as_slice(), corpus_bytes.as_slice()]),
        out_dir: dir.clone(),
        extra: Default::default(),
    }
    .write()?;

    let model = load_checkpoint(&a.checkpoint)?;
    let seq = a.seq_len.unwrap_or(model.config().context_length);
    let tokens = crate::trainer::encode(&String::from_utf8_lossy(&corpus_bytes));
    let analysis = analyze_model(&model, &tokens, a.batches, a.batch, seq)?;
    let ranks = rank_csv(&analysis.ranks);
    let sim = similarity_csv(&analysis.similarity);
    fs::write(dir.join("ranks.csv"), &ranks)?;
    fs::write(dir.join("similarity.csv"), &sim)?;
    print!("{ranks}\n{sim}");
    println!("{}", dir.display());
    Ok(())
}

fn cmd_theory(a: TheoryArgs) -> Result<(), CliError> {
    let audit: Audit = a.audit.parse()?;
    let mut opts = AuditOptions::defaults(audit);
    opts.dim = a.dim;
    opts.order = a.order;
    opts.max_n = a.max_n;
    opts.seed = a.seed;
    opts.eps = if a.eps.is_empty() { audit.default_eps(a.dim) } else { a.eps.clone() };
    if !a.coeffs.is_empty() {
        opts.coeffs = a.coeffs.clone();
    }
    let dir = run_dir(a.out.clone(), format!("theory-{audit}"));
    let config = json!({ "audit": audit.name(), "options": opts });
    RunManifest {
        command: "theory".into(),
        config: config.clone(),
        seed: a.seed,
        input_hash: content_hash([config.to_string().as_bytes()]),
        out_dir: dir.clone(),
        extra: Default::default(),
    }
    .write()?;
    let table = run_audit(audit, &opts)?;
    let csv = table.to_csv();
    fs::write(dir.join(format!("{audit}.csv")), &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_flops(a: FlopsArgs) -> Result<(), CliError> {
    let kind: Option<CostKind> = a.kind.as_deref().map(str::parse).transpose()?;
    let dir = run_dir(a.out.clone(), "flops".into());
    let config = json!({
        "kind": kind.map(CostKind::name),
        "B": a.batch, "S": a.seq, "H": a.hidden,
        "ckpt": a.ckpt, "all": a.all,
    });
    RunManifest {
        command: "flops".into(),
        config: config.clone(),
        seed: 0,
        input_hash: content_hash([config.to_string().as_bytes()]),
        out_dir: dir.clone(),
        extra: Default::default(),
    }
    .write()?;
    let rows = match kind {
        Some(k) if a.all => vec![
            activation_cost(k, a.batch, a.seq, a.hidden, false)?,
            activation_cost(k, a.batch, a.seq, a.hidden, true)?,
        ],
        Some(k) => vec![activation_cost(k, a.batch, a.seq, a.hidden, a.ckpt)?],
        None => cost_table(a.batch, a.seq, a.hidden)?
            .into_iter()
            .filter(|r| a.all || r.checkpointing == a.ckpt)
            .collect(),
    };
    let csv = cost_csv(&rows);
    fs::write(dir.join("cost.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}
