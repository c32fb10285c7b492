//! Command-line driver: train/eval integer networks, audit overflow
//! bounds, and run the floating-point reference.
//!
//! Every option can come from an explicit flag, a `key=value` config
//! file (`--config`), or a documented default — in that priority order.
//! Each run prints its fully-resolved configuration before executing.
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use pknn::activations::ActivationKind;
use pknn::baseline::{fp_metrics_to_csv, fp_train, FpConfig};
use pknn::data::Dataset;
use pknn::network::Network;
use pknn::overflow;
use pknn::rng::Rng;
use pknn::trainer::{self, metrics_to_csv, TrainConfig, TrainMode};

#[derive(Parser)]
#[command(
    name = "pknn",
    version,
    about = "Integer-only neural network training via direct feedback alignment"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train an integer network and write the model and metrics CSV.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset.
    Eval(EvalArgs),
    /// Print the per-layer delta bit-bound table for BP vs DFA.
    Audit(AuditArgs),
    /// Train the floating-point reference and write its metrics CSV.
    Baseline(BaselineArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Key=value config file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training images (IDX). Required.
    #[arg(long)]
    train_images: Option<PathBuf>,
    /// Training labels (IDX). Required.
    #[arg(long)]
    train_labels: Option<PathBuf>,
    /// Validation images (IDX). Required.
    #[arg(long)]
    val_images: Option<PathBuf>,
    /// Validation labels (IDX). Required.
    #[arg(long)]
    val_labels: Option<PathBuf>,
    /// Directory joined to relative dataset paths.
    #[arg(long, env = "PKNN_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Comma-separated layer widths, input first [default: 784,100,50,10].
    #[arg(long)]
    arch: Option<String>,
    /// pocket_sigmoid | pocket_tanh | pocket_relu8 [default: pocket_tanh].
    #[arg(long)]
    actv: Option<String>,
    /// [default: 100]
    #[arg(long)]
    epochs: Option<usize>,
    /// [default: 20]
    #[arg(long)]
    batch: Option<usize>,
    /// Update divisor; the learning rate is 1/lr_inverse [default: 1000].
    #[arg(long)]
    lr_inverse: Option<i32>,
    /// Epochs between doublings of lr_inverse; 0 disables [default: 10].
    #[arg(long)]
    lr_double_every: Option<usize>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// dfa | bp [default: dfa].
    #[arg(long)]
    mode: Option<String>,
    /// Pre-activation divisor [default: 1].
    #[arg(long)]
    pre_div: Option<i32>,
    /// Feedback matrix range, low end [default: -8].
    #[arg(long)]
    feedback_lo: Option<i32>,
    /// Feedback matrix range, high end [default: 8].
    #[arg(long)]
    feedback_hi: Option<i32>,
    /// Shuffle each epoch: true | false [default: true].
    #[arg(long)]
    shuffle: Option<bool>,
    /// Output model path [default: model.pknn].
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Output metrics CSV path [default: metrics.csv].
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Key=value config file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Saved model. Required.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Images (IDX). Required.
    #[arg(long)]
    images: Option<PathBuf>,
    /// Labels (IDX). Required.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Directory joined to relative dataset paths.
    #[arg(long, env = "PKNN_DATA_DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Key=value config file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of hidden layers. Required.
    #[arg(long)]
    hidden: Option<u32>,
    /// Error bits [default: 8].
    #[arg(long)]
    e: Option<u32>,
    /// Weight bits [default: 8].
    #[arg(long)]
    w: Option<u32>,
    /// Feedback bits [default: 8].
    #[arg(long)]
    r: Option<u32>,
    /// Accumulator bits [default: 32].
    #[arg(long)]
    acc: Option<u32>,
    /// Also print the table as comma-separated rows.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct BaselineArgs {
    /// Key=value config file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training images (IDX). Required.
    #[arg(long)]
    train_images: Option<PathBuf>,
    /// Training labels (IDX). Required.
    #[arg(long)]
    train_labels: Option<PathBuf>,
    /// Validation images (IDX). Required.
    #[arg(long)]
    val_images: Option<PathBuf>,
    /// Validation labels (IDX). Required.
    #[arg(long)]
    val_labels: Option<PathBuf>,
    /// Directory joined to relative dataset paths.
    #[arg(long, env = "PKNN_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Comma-separated layer widths, input first [default: 784,100,50,10].
    #[arg(long)]
    arch: Option<String>,
    /// [default: 100]
    #[arg(long)]
    epochs: Option<usize>,
    /// [default: 20]
    #[arg(long)]
    batch: Option<usize>,
    /// The learning rate is 1/lr_inverse [default: 10].
    #[arg(long)]
    lr_inverse: Option<i32>,
    /// Epochs between doublings of lr_inverse; 0 disables [default: 10].
    #[arg(long)]
    lr_double_every: Option<usize>,
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Shuffle each epoch: true | false [default: true].
    #[arg(long)]
    shuffle: Option<bool>,
    /// Output metrics CSV path [default: metrics.csv].
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

/// A usage problem (exit 2) as opposed to a runtime failure (exit 1).
#[derive(Debug)]
struct UsageError(String);

enum CmdError {
    Usage(String),
    Runtime(String),
}

impl From<UsageError> for CmdError {
    fn from(e: UsageError) -> CmdError {
        CmdError::Usage(e.0)
    }
}

impl From<pknn::Error> for CmdError {
    fn from(e: pknn::Error) -> CmdError {
        CmdError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> CmdError {
        CmdError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Train(args) => cmd_train(args),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::Audit(args) => cmd_audit(args),
        Cmd::Baseline(args) => cmd_baseline(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CmdError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Parsed `key=value` config file. Blank lines and `#` comments are
/// skipped.
struct ConfigMap(HashMap<String, String>);

impl ConfigMap {
    fn load(path: Option<&Path>, known_keys: &[&str]) -> Result<ConfigMap, CmdError> {
        let mut map = HashMap::new();
        let Some(path) = path else {
            return Ok(ConfigMap(map));
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Usage(format!("config {}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CmdError::Usage(format!(
                    "config {} line {}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if !known_keys.contains(&key.as_str()) {
                return Err(CmdError::Usage(format!(
                    "config {} line {}: unknown key {key:?}",
                    path.display(),
                    lineno + 1
                )));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(ConfigMap(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CmdError>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CmdError::Usage(format!("config key {key} = {raw:?}: {e}"))
            }),
        }
    }
}

/// flag > config > default.
fn resolve<T>(flag: Option<T>, from_config: Option<T>, default: T) -> T {
    flag.or(from_config).unwrap_or(default)
}

fn resolve_required<T>(
    flag: Option<T>,
    from_config: Option<T>,
    what: &str,
) -> Result<T, CmdError> {
    flag.or(from_config)
        .ok_or_else(|| CmdError::Usage(format!("missing required option --{what}")))
}

fn parse_arch(s: &str) -> Result<Vec<usize>, CmdError> {
    let dims: Vec<usize> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| CmdError::Usage(format!("bad arch component {p:?} in {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    if dims.len() < 2 || dims.contains(&0) {
        return Err(CmdError::Usage(format!(
            "arch needs at least two positive widths, got {s:?}"
        )));
    }
    Ok(dims)
}

/// Joins a dataset path onto the data directory unless it is absolute.
fn resolve_data_path(path: PathBuf, data_dir: Option<&Path>) -> PathBuf {
    match data_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path,
    }
}

fn arch_string(dims: &[usize]) -> String {
    dims.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

const TRAIN_KEYS: &[&str] = &[
    "train-images",
    "train-labels",
    "val-images",
    "val-labels",
    "data-dir",
    "arch",
    "actv",
    "epochs",
    "batch",
    "lr-inverse",
    "lr-double-every",
    "seed",
    "mode",
    "pre-div",
    "feedback-lo",
    "feedback-hi",
    "shuffle",
    "model-out",
    "metrics-out",
];

fn cmd_train(args: TrainArgs) -> Result<(), CmdError> {
    let cfg_file = ConfigMap::load(args.config.as_deref(), TRAIN_KEYS)?;

    let data_dir = args.data_dir.or(cfg_file.get::<PathBuf>("data-dir")?);
    let train_images = resolve_required(
        args.train_images,
        cfg_file.get("train-images")?,
        "train-images",
    )?;
    let train_labels = resolve_required(
        args.train_labels,
        cfg_file.get("train-labels")?,
        "train-labels",
    )?;
    let val_images = resolve_required(args.val_images, cfg_file.get("val-images")?, "val-images")?;
    let val_labels = resolve_required(args.val_labels, cfg_file.get("val-labels")?, "val-labels")?;
    let arch_raw = resolve(
        args.arch,
        cfg_file.get("arch")?,
        "784,100,50,10".to_string(),
    );
    let arch = parse_arch(&arch_raw)?;
    let actv = resolve(args.actv, cfg_file.get("actv")?, "pocket_tanh".to_string())
        .parse::<ActivationKind>()
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let mode = resolve(args.mode, cfg_file.get("mode")?, "dfa".to_string())
        .parse::<TrainMode>()
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let pre_div = resolve(args.pre_div, cfg_file.get("pre-div")?, 1);
    let feedback_lo = resolve(args.feedback_lo, cfg_file.get("feedback-lo")?, -8);
    let feedback_hi = resolve(args.feedback_hi, cfg_file.get("feedback-hi")?, 8);
    let model_out = resolve(
        args.model_out,
        cfg_file.get("model-out")?,
        PathBuf::from("model.pknn"),
    );
    let metrics_out = resolve(
        args.metrics_out,
        cfg_file.get("metrics-out")?,
        PathBuf::from("metrics.csv"),
    );
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        epochs: resolve(args.epochs, cfg_file.get("epochs")?, defaults.epochs),
        batch_size: resolve(args.batch, cfg_file.get("batch")?, defaults.batch_size),
        lr_inverse: resolve(
            args.lr_inverse,
            cfg_file.get("lr-inverse")?,
            defaults.lr_inverse,
        ),
        lr_double_every: resolve(
            args.lr_double_every,
            cfg_file.get("lr-double-every")?,
            defaults.lr_double_every,
        ),
        seed: resolve(args.seed, cfg_file.get("seed")?, defaults.seed),
        mode,
        shuffle: resolve(args.shuffle, cfg_file.get("shuffle")?, defaults.shuffle),
    };

    if cfg.batch_size == 0 {
        return Err(CmdError::Usage("batch must be ≥ 1".into()));
    }
    if cfg.lr_inverse < 1 {
        return Err(CmdError::Usage("lr-inverse must be ≥ 1".into()));
    }
    if pre_div < 1 {
        return Err(CmdError::Usage("pre-div must be ≥ 1".into()));
    }
    if feedback_lo > feedback_hi {
        return Err(CmdError::Usage(format!(
            "feedback range [{feedback_lo}, {feedback_hi}] is empty"
        )));
    }

    let train_images = resolve_data_path(train_images, data_dir.as_deref());
    let train_labels = resolve_data_path(train_labels, data_dir.as_deref());
    let val_images = resolve_data_path(val_images, data_dir.as_deref());
    let val_labels = resolve_data_path(val_labels, data_dir.as_deref());

    println!("command = train");
    println!("train_images = {}", train_images.display());
    println!("train_labels = {}", train_labels.display());
    println!("val_images = {}", val_images.display());
    println!("val_labels = {}", val_labels.display());
    println!("arch = {}", arch_string(&arch));
    println!("actv = {actv}");
    println!("epochs = {}", cfg.epochs);
    println!("batch = {}", cfg.batch_size);
    println!("lr_inverse = {}", cfg.lr_inverse);
    println!("lr_double_every = {}", cfg.lr_double_every);
    println!("seed = {}", cfg.seed);
    println!("mode = {}", cfg.mode);
    println!("pre_div = {pre_div}");
    println!("feedback_lo = {feedback_lo}");
    println!("feedback_hi = {feedback_hi}");
    println!("shuffle = {}", cfg.shuffle);
    println!("model_out = {}", model_out.display());
    println!("metrics_out = {}", metrics_out.display());

    for (i, &width) in arch.iter().enumerate() {
        if overflow::dfa_wide_layer_warning(width) {
            eprintln!(
                "warning: layer {i} width {width} exceeds 2^16 nodes; the depth-independent \
                 delta bound no longer covers the fan-in sum"
            );
        }
    }

    let train_set = Dataset::from_idx_files(&train_images, &train_labels)?;
    let val_set = Dataset::from_idx_files(&val_images, &val_labels)?;
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut net = Network::build(&arch, actv, pre_div, &mut rng, (feedback_lo, feedback_hi))?;
    let metrics = trainer::train(&mut net, &train_set, &val_set, &cfg)?;

    std::fs::write(&metrics_out, metrics_to_csv(&metrics))?;
    net.save(&model_out)?;

    let best = metrics.iter().map(|m| m.val_accuracy).fold(0.0, f64::max);
    if let Some(last) = metrics.last() {
        println!("final_val_acc = {:.6}", last.val_accuracy);
        println!("best_val_acc = {best:.6}");
    } else {
        println!("final_val_acc = n/a (0 epochs)");
    }
    Ok(())
}

const EVAL_KEYS: &[&str] = &["model", "images", "labels", "data-dir"];

fn cmd_eval(args: EvalArgs) -> Result<(), CmdError> {
    let cfg_file = ConfigMap::load(args.config.as_deref(), EVAL_KEYS)?;
    let data_dir = args.data_dir.or(cfg_file.get::<PathBuf>("data-dir")?);
    let model = resolve_required(args.model, cfg_file.get("model")?, "model")?;
    let images = resolve_required(args.images, cfg_file.get("images")?, "images")?;
    let labels = resolve_required(args.labels, cfg_file.get("labels")?, "labels")?;

    let images = resolve_data_path(images, data_dir.as_deref());
    let labels = resolve_data_path(labels, data_dir.as_deref());

    println!("command = eval");
    println!("model = {}", model.display());
    println!("images = {}", images.display());
    println!("labels = {}", labels.display());

    let net = Network::load(&model)?;
    let data = Dataset::from_idx_files(&images, &labels)?;
    let accuracy = trainer::evaluate(&net, &data)?;
    println!("accuracy = {accuracy:.6}");
    Ok(())
}

const AUDIT_KEYS: &[&str] = &["hidden", "e", "w", "r", "acc"];

fn cmd_audit(args: AuditArgs) -> Result<(), CmdError> {
    let cfg_file = ConfigMap::load(args.config.as_deref(), AUDIT_KEYS)?;
    let hidden = resolve_required(args.hidden, cfg_file.get("hidden")?, "hidden")?;
    let e = resolve(args.e, cfg_file.get("e")?, 8);
    let w = resolve(args.w, cfg_file.get("w")?, 8);
    let r = resolve(args.r, cfg_file.get("r")?, 8);
    let acc = resolve(args.acc, cfg_file.get("acc")?, 32);

    for (name, v) in [("hidden", hidden), ("e", e), ("w", w), ("r", r), ("acc", acc)] {
        if v == 0 {
            return Err(CmdError::Usage(format!("--{name} must be ≥ 1")));
        }
    }

    println!("command = audit");
    println!("hidden = {hidden}");
    println!("e = {e}");
    println!("w = {w}");
    println!("r = {r}");
    println!("acc = {acc}");
    println!();

    let report = overflow::audit(hidden, e, w, r, acc);
    print!("{report}");
    if args.csv {
        println!();
        print!("{}", report.to_csv());
    }
    Ok(())
}

const BASELINE_KEYS: &[&str] = &[
    "train-images",
    "train-labels",
    "val-images",
    "val-labels",
    "data-dir",
    "arch",
    "epochs",
    "batch",
    "lr-inverse",
    "lr-double-every",
    "seed",
    "shuffle",
    "metrics-out",
];

fn cmd_baseline(args: BaselineArgs) -> Result<(), CmdError> {
    let cfg_file = ConfigMap::load(args.config.as_deref(), BASELINE_KEYS)?;

    let data_dir = args.data_dir.or(cfg_file.get::<PathBuf>("data-dir")?);
    let train_images = resolve_required(
        args.train_images,
        cfg_file.get("train-images")?,
        "train-images",
    )?;
    let train_labels = resolve_required(
        args.train_labels,
        cfg_file.get("train-labels")?,
        "train-labels",
    )?;
    let val_images = resolve_required(args.val_images, cfg_file.get("val-images")?, "val-images")?;
    let val_labels = resolve_required(args.val_labels, cfg_file.get("val-labels")?, "val-labels")?;
    let arch_raw = resolve(
        args.arch,
        cfg_file.get("arch")?,
        "784,100,50,10".to_string(),
    );
    let arch = parse_arch(&arch_raw)?;
    let metrics_out = resolve(
        args.metrics_out,
        cfg_file.get("metrics-out")?,
        PathBuf::from("metrics.csv"),
    );
    let defaults = FpConfig::default();
    let cfg = FpConfig {
        epochs: resolve(args.epochs, cfg_file.get("epochs")?, defaults.epochs),
        batch_size: resolve(args.batch, cfg_file.get("batch")?, defaults.batch_size),
        lr_inverse: resolve(
            args.lr_inverse,
            cfg_file.get("lr-inverse")?,
            defaults.lr_inverse,
        ),
        lr_double_every: resolve(
            args.lr_double_every,
            cfg_file.get("lr-double-every")?,
            defaults.lr_double_every,
        ),
        seed: resolve(args.seed, cfg_file.get("seed")?, defaults.seed),
        shuffle: resolve(args.shuffle, cfg_file.get("shuffle")?, defaults.shuffle),
    };

    if cfg.batch_size == 0 {
        return Err(CmdError::Usage("batch must be ≥ 1".into()));
    }
    if cfg.lr_inverse < 1 {
        return Err(CmdError::Usage("lr-inverse must be ≥ 1".into()));
    }

    let train_images = resolve_data_path(train_images, data_dir.as_deref());
    let train_labels = resolve_data_path(train_labels, data_dir.as_deref());
    let val_images = resolve_data_path(val_images, data_dir.as_deref());
    let val_labels = resolve_data_path(val_labels, data_dir.as_deref());

    println!("command = baseline");
    println!("train_images = {}", train_images.display());
    println!("train_labels = {}", train_labels.display());
    println!("val_images = {}", val_images.display());
    println!("val_labels = {}", val_labels.display());
    println!("arch = {}", arch_string(&arch));
    println!("epochs = {}", cfg.epochs);
    println!("batch = {}", cfg.batch_size);
    println!("lr_inverse = {}", cfg.lr_inverse);
    println!("lr_double_every = {}", cfg.lr_double_every);
    println!("seed = {}", cfg.seed);
    println!("shuffle = {}", cfg.shuffle);
    println!("metrics_out = {}", metrics_out.display());

    let train_set = Dataset::from_idx_files(&train_images, &train_labels)?;
    let val_set = Dataset::from_idx_files(&val_images, &val_labels)?;
    let (_net, metrics) = fp_train(&arch, &train_set, &val_set, &cfg)?;

    std::fs::write(&metrics_out, fp_metrics_to_csv(&metrics))?;

    let best = metrics.iter().map(|m| m.val_accuracy).fold(0.0, f64::max);
    if let Some(last) = metrics.last() {
        println!("final_val_acc = {:.6}", last.val_accuracy);
        println!("best_val_acc = {best:.6}");
    }
    Ok(())
}
