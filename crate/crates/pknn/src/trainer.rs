//! Epoch/batch training loop with an integer learning-rate schedule.
//!
//! The learning rate is the reciprocal of an integer divisor:
//! `lr_inverse` starts at 1000 (a rate of 0.001) and doubles every
//! `lr_double_every` epochs — the integer analogue of halving the rate —
//! saturating at 2³⁰. Each batch runs forward, takes the loss delta
//! ŷ − y, and applies the configured backward pass with gradient
//! averaging over the actual batch size.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::{l2_loss_delta, sse_loss, TargetEncoding};
use crate::network::Network;
use crate::rng::Rng;

pub const LR_INVERSE_CAP: i32 = 1 << 30;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TrainMode {
    /// Direct feedback alignment with checked integer arithmetic.
    DfaInt,
    /// Instrumented backpropagation: saturating arithmetic with per-layer
    /// overflow counters.
    BpInt,
}

impl std::fmt::Display for TrainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrainMode::DfaInt => "dfa",
            TrainMode::BpInt => "bp",
        })
    }
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<TrainMode> {
        match s {
            "dfa" => Ok(TrainMode::DfaInt),
            "bp" => Ok(TrainMode::BpInt),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mode {s:?}; expected dfa or bp"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_inverse: i32,
    pub lr_double_every: usize,
    pub seed: u64,
    pub mode: TrainMode,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            epochs: 100,
            batch_size: 20,
            lr_inverse: 1000,
            lr_double_every: 10,
            seed: 1,
            mode: TrainMode::DfaInt,
            shuffle: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochMetrics {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Divisor in effect during this epoch.
    pub lr_inverse: i32,
    /// Summed training SSE over the epoch's batches.
    pub train_loss: i64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    /// Total saturation events (always 0 in DFA mode).
    pub overflow_count: u64,
}

pub const METRICS_CSV_HEADER: &str = "epoch,lr_inverse,train_loss,train_acc,val_acc,overflow_count";

/// Renders metrics as CSV: one header line, one row per epoch.
pub fn metrics_to_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for m in metrics {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6},{}\n",
            m.epoch, m.lr_inverse, m.train_loss, m.train_accuracy, m.val_accuracy, m.overflow_count
        ));
    }
    out
}

/// Divisor in effect for a 1-based epoch: doubled once per elapsed
/// `double_every` period, saturating at 2³⁰.
pub fn lr_inverse_for_epoch(initial: i32, double_every: usize, epoch: usize) -> i32 {
    debug_assert!(initial >= 1 && epoch >= 1);
    if double_every == 0 {
        return initial;
    }
    let doublings = (epoch - 1) / double_every;
    let mut lr = initial.min(LR_INVERSE_CAP);
    for _ in 0..doublings {
        if lr > LR_INVERSE_CAP / 2 {
            return LR_INVERSE_CAP;
        }
        lr *= 2;
    }
    lr
}

/// Uniform Fisher–Yates permutation of `0..n`.
pub fn shuffle_indices(n: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot shuffle 0 indices".into()));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut indices);
    Ok(indices)
}

/// Fraction of samples whose predicted class matches the label.
pub fn evaluate(net: &Network, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    // Predict in slices to keep batch matrices small.
    let mut correct = 0usize;
    let n = data.len();
    let chunk = 256;
    let mut at = 0;
    while at < n {
        let end = (at + chunk).min(n);
        let indices: Vec<usize> = (at..end).collect();
        let (x, labels) = data.gather(&indices)?;
        let predicted = net.predict(&x)?;
        correct += predicted
            .iter()
            .zip(&labels)
            .filter(|(p, l)| p == l)
            .count();
        at = end;
    }
    Ok(correct as f64 / n as f64)
}

fn check_compat(net: &Network, data: &Dataset, what: &str) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.feature_width() != net.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "{what} feature width {} but network expects {}",
            data.feature_width(),
            net.input_dim()
        )));
    }
    if let Some(&bad) = data.labels().iter().find(|&&l| l >= net.num_classes()) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            num_classes: net.num_classes(),
        });
    }
    Ok(())
}

/// Runs the full training protocol and returns per-epoch metrics. The
/// random state (shuffling) is seeded from `cfg.seed`, so the run is
/// deterministic given the initial network, data and config.
pub fn train(
    net: &mut Network,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochMetrics>> {
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be ≥ 1".into()));
    }
    if cfg.lr_inverse < 1 {
        return Err(Error::InvalidArgument(format!(
            "lr_inverse must be ≥ 1, got {}",
            cfg.lr_inverse
        )));
    }
    check_compat(net, train, "training")?;
    check_compat(net, val, "validation")?;

    let enc = TargetEncoding::new(net.num_classes());
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let n = train.len();
    let mut metrics = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let lr_inverse = lr_inverse_for_epoch(cfg.lr_inverse, cfg.lr_double_every, epoch);
        let order = if cfg.shuffle {
            shuffle_indices(n, &mut rng)?
        } else {
            (0..n).collect()
        };

        let mut train_loss = 0i64;
        let mut correct = 0usize;
        let mut overflow_count = 0u64;

        for batch in order.chunks(cfg.batch_size) {
            let (x, labels) = train.gather(batch)?;
            let y = enc.one_hot_batch(&labels)?;
            let yhat = net.forward(&x)?;

            for (i, &label) in labels.iter().enumerate() {
                if yhat.argmax_row(i)? == label {
                    correct += 1;
                }
            }
            train_loss += sse_loss(&yhat, &y)?;

            let error = l2_loss_delta(&yhat, &y)?;
            // The final short batch averages over its true size.
            let batch_div = batch.len() as i32;
            match cfg.mode {
                TrainMode::DfaInt => net.dfa_backward(&error, lr_inverse, batch_div)?,
                TrainMode::BpInt => {
                    overflow_count += net.bp_backward(&error, lr_inverse, batch_div)?.total()
                }
            }
        }

        metrics.push(EpochMetrics {
            epoch,
            lr_inverse,
            train_loss,
            train_accuracy: correct as f64 / n as f64,
            val_accuracy: evaluate(net, val)?,
            overflow_count,
        });
    }
    Ok(metrics)
}
