//! Double-precision reference network for accuracy comparison: tanh
//! hidden layers, a softmax + negative-log-likelihood head, plain SGD
//! with the same halving schedule as the integer trainer (tracked as an
//! integer divisor so the learning rate is exactly 1/lr_inverse).
//!
//! Pixel features arrive with 8-bit semantics and are normalized to
//! [0, 1] here. Weights use Glorot uniform initialization, biases start
//! at zero.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::trainer::{lr_inverse_for_epoch, METRICS_CSV_HEADER};

#[derive(Clone, Debug)]
struct FpLayer {
    d_in: usize,
    d_out: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FpNetwork {
    layers: Vec<FpLayer>,
}

#[derive(Clone, Copy, Debug)]
pub struct FpConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// The learning rate is 1/lr_inverse; 10 gives the reference 0.1.
    pub lr_inverse: i32,
    pub lr_double_every: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for FpConfig {
    fn default() -> FpConfig {
        FpConfig {
            epochs: 100,
            batch_size: 20,
            lr_inverse: 10,
            lr_double_every: 10,
            seed: 1,
            shuffle: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FpEpochMetrics {
    pub epoch: usize,
    pub lr_inverse: i32,
    /// Mean negative log-likelihood over the epoch.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

/// Same CSV layout as the integer trainer; the overflow column is
/// structurally zero for floating point.
pub fn fp_metrics_to_csv(metrics: &[FpEpochMetrics]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for m in metrics {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},0\n",
            m.epoch, m.lr_inverse, m.train_loss, m.train_accuracy, m.val_accuracy
        ));
    }
    out
}

/// Per-layer gradients in parameter layout.
#[derive(Clone, Debug)]
pub struct FpGradients {
    pub dw: Vec<Vec<f64>>,
    pub db: Vec<Vec<f64>>,
}

struct ForwardTrace {
    /// Per layer: the layer's input activations (batch×d_in).
    inputs: Vec<Vec<f64>>,
    /// Hidden activations per layer (batch×d_out); logits for the last.
    outputs: Vec<Vec<f64>>,
    /// Softmax probabilities (batch×num_classes).
    probs: Vec<f64>,
}

fn normalize(features: &crate::matrix::IntMatrix) -> Vec<f64> {
    features.as_slice().iter().map(|&v| v as f64 / 127.0).collect()
}

impl FpNetwork {
    /// Glorot-uniform weights, zero biases.
    pub fn new(dims: &[usize], seed: u64) -> Result<FpNetwork> {
        if dims.len() < 2 {
            return Err(Error::InvalidDimension(format!(
                "need at least input and output widths, got {dims:?}"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidDimension(format!(
                "zero layer width in {dims:?}"
            )));
        }
        let mut rng = Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|pair| {
                let (d_in, d_out) = (pair[0], pair[1]);
                let limit = (6.0 / (d_in + d_out) as f64).sqrt();
                let w = (0..d_in * d_out)
                    .map(|_| (2.0 * rng.next_f64() - 1.0) * limit)
                    .collect();
                FpLayer {
                    d_in,
                    d_out,
                    w,
                    b: vec![0.0; d_out],
                }
            })
            .collect();
        Ok(FpNetwork { layers })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].d_in];
        dims.extend(self.layers.iter().map(|l| l.d_out));
        dims
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().expect("nonempty").d_out
    }

    /// Direct read/write access to a parameter, counting weights first
    /// then biases within a layer (finite-difference probing).
    pub fn param(&self, layer: usize, idx: usize) -> f64 {
        let l = &self.layers[layer];
        if idx < l.w.len() {
            l.w[idx]
        } else {
            l.b[idx - l.w.len()]
        }
    }

    pub fn param_mut(&mut self, layer: usize, idx: usize) -> &mut f64 {
        let l = &mut self.layers[layer];
        if idx < l.w.len() {
            &mut l.w[idx]
        } else {
            &mut l.b[idx - l.w.len()]
        }
    }

    pub fn param_count(&self, layer: usize) -> usize {
        let l = &self.layers[layer];
        l.w.len() + l.b.len()
    }

    fn forward_trace(&self, x: &[f64], batch: usize) -> ForwardTrace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; batch * layer.d_out];
            for s in 0..batch {
                let row = &current[s * layer.d_in..(s + 1) * layer.d_in];
                let out = &mut z[s * layer.d_out..(s + 1) * layer.d_out];
                out.copy_from_slice(&layer.b);
                for (i, &av) in row.iter().enumerate() {
                    if av == 0.0 {
                        continue;
                    }
                    let wrow = &layer.w[i * layer.d_out..(i + 1) * layer.d_out];
                    for (o, &wv) in out.iter_mut().zip(wrow) {
                        *o += av * wv;
                    }
                }
            }
            if li < last {
                for v in &mut z {
                    *v = v.tanh();
                }
            }
            inputs.push(current);
            current = z.clone();
            outputs.push(z);
        }

        // Softmax over the logits, shifted for stability.
        let classes = self.num_classes();
        let mut probs = current;
        for s in 0..batch {
            let row = &mut probs[s * classes..(s + 1) * classes];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        ForwardTrace {
            inputs,
            outputs,
            probs,
        }
    }

    /// Softmax class probabilities, one row per sample.
    pub fn forward_probs(&self, x: &[f64], batch: usize) -> Vec<f64> {
        self.forward_trace(x, batch).probs
    }

    /// Mean negative log-likelihood of the true classes.
    pub fn loss_on_batch(&self, x: &[f64], labels: &[usize]) -> f64 {
        let batch = labels.len();
        let probs = self.forward_probs(x, batch);
        let classes = self.num_classes();
        let nll: f64 = labels
            .iter()
            .enumerate()
            .map(|(s, &l)| -probs[s * classes + l].max(1e-300).ln())
            .sum();
        nll / batch as f64
    }

    /// Analytic mean gradients for a batch.
    pub fn grad_on_batch(&self, x: &[f64], labels: &[usize]) -> FpGradients {
        let batch = labels.len();
        let trace = self.forward_trace(x, batch);
        let classes = self.num_classes();
        let n = self.layers.len();

        // d(mean NLL)/d(logits) = (probs − onehot)/batch.
        let mut dz = trace.probs;
        for (s, &l) in labels.iter().enumerate() {
            dz[s * classes + l] -= 1.0;
        }
        for v in &mut dz {
            *v /= batch as f64;
        }

        let mut dw = vec![Vec::new(); n];
        let mut db = vec![Vec::new(); n];
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            let input = &trace.inputs[k];
            let mut dwk = vec![0.0; layer.d_in * layer.d_out];
            let mut dbk = vec![0.0; layer.d_out];
            for s in 0..batch {
                let dzrow = &dz[s * layer.d_out..(s + 1) * layer.d_out];
                let xrow = &input[s * layer.d_in..(s + 1) * layer.d_in];
                for (j, &dv) in dzrow.iter().enumerate() {
                    dbk[j] += dv;
                }
                for (i, &xv) in xrow.iter().enumerate() {
                    if xv == 0.0 {
                        continue;
                    }
                    let drow = &mut dwk[i * layer.d_out..(i + 1) * layer.d_out];
                    for (d, &dv) in drow.iter_mut().zip(dzrow) {
                        *d += xv * dv;
                    }
                }
            }
            if k > 0 {
                // Propagate: dz_prev = (dz · Wᵀ) ⊙ tanh'(a_prev).
                let prev_out = &trace.outputs[k - 1];
                let mut dprev = vec![0.0; batch * layer.d_in];
                for s in 0..batch {
                    let dzrow = &dz[s * layer.d_out..(s + 1) * layer.d_out];
                    let drow = &mut dprev[s * layer.d_in..(s + 1) * layer.d_in];
                    for (i, dv) in drow.iter_mut().enumerate() {
                        let wrow = &layer.w[i * layer.d_out..(i + 1) * layer.d_out];
                        *dv = wrow.iter().zip(dzrow).map(|(&w, &d)| w * d).sum();
                    }
                }
                for (d, &a) in dprev.iter_mut().zip(prev_out) {
                    *d *= 1.0 - a * a;
                }
                dz = dprev;
            }
            dw[k] = dwk;
            db[k] = dbk;
        }
        FpGradients { dw, db }
    }

    fn sgd_step(&mut self, grads: &FpGradients, lr: f64) {
        for (layer, (dw, db)) in self.layers.iter_mut().zip(grads.dw.iter().zip(&grads.db)) {
            for (w, &d) in layer.w.iter_mut().zip(dw) {
                *w -= lr * d;
            }
            for (b, &d) in layer.b.iter_mut().zip(db) {
                *b -= lr * d;
            }
        }
    }

    /// One SGD update from a batch; returns the batch's mean NLL.
    pub fn train_batch(&mut self, x: &[f64], labels: &[usize], lr: f64) -> f64 {
        let loss = self.loss_on_batch(x, labels);
        let grads = self.grad_on_batch(x, labels);
        self.sgd_step(&grads, lr);
        loss
    }

    pub fn predict(&self, x: &[f64], batch: usize) -> Vec<usize> {
        let probs = self.forward_probs(x, batch);
        let classes = self.num_classes();
        (0..batch)
            .map(|s| {
                let row = &probs[s * classes..(s + 1) * classes];
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }
}

pub fn fp_evaluate(net: &FpNetwork, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.len();
    let mut correct = 0usize;
    let chunk = 256;
    let mut at = 0;
    while at < n {
        let end = (at + chunk).min(n);
        let indices: Vec<usize> = (at..end).collect();
        let (xi, labels) = data.gather(&indices)?;
        let x = normalize(&xi);
        let predicted = net.predict(&x, labels.len());
        correct += predicted
            .iter()
            .zip(&labels)
            .filter(|(p, l)| p == l)
            .count();
        at = end;
    }
    Ok(correct as f64 / n as f64)
}

fn fp_check_compat(net: &FpNetwork, data: &Dataset, what: &str) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.feature_width() != net.layers[0].d_in {
        return Err(Error::ShapeMismatch(format!(
            "{what} feature width {} but network expects {}",
            data.feature_width(),
            net.layers[0].d_in
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

/// Reference training run. With `epochs == 0` the initial state is
/// evaluated and reported as a single epoch-0 row.
pub fn fp_train(
    dims: &[usize],
    train: &Dataset,
    val: &Dataset,
    cfg: &FpConfig,
) -> Result<(FpNetwork, Vec<FpEpochMetrics>)> {
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be ≥ 1".into()));
    }
    if cfg.lr_inverse < 1 {
        return Err(Error::InvalidArgument(format!(
            "lr_inverse must be ≥ 1, got {}",
            cfg.lr_inverse
        )));
    }
    let mut net = FpNetwork::new(dims, cfg.seed)?;
    fp_check_compat(&net, train, "training")?;
    fp_check_compat(&net, val, "validation")?;

    let mut rng = Rng::seed_from_u64(cfg.seed);
    let n = train.len();
    let mut metrics = Vec::new();

    if cfg.epochs == 0 {
        let indices: Vec<usize> = (0..n).collect();
        let (xi, labels) = train.gather(&indices)?;
        let x = normalize(&xi);
        metrics.push(FpEpochMetrics {
            epoch: 0,
            lr_inverse: cfg.lr_inverse,
            train_loss: net.loss_on_batch(&x, &labels),
            train_accuracy: {
                let predicted = net.predict(&x, labels.len());
                predicted.iter().zip(&labels).filter(|(p, l)| p == l).count() as f64 / n as f64
            },
            val_accuracy: fp_evaluate(&net, val)?,
        });
        return Ok((net, metrics));
    }

    for epoch in 1..=cfg.epochs {
        let lr_inverse = lr_inverse_for_epoch(cfg.lr_inverse, cfg.lr_double_every, epoch);
        let lr = 1.0 / lr_inverse as f64;
        let order = if cfg.shuffle {
            let mut indices: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut indices);
            indices
        } else {
            (0..n).collect()
        };

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let (xi, labels) = train.gather(batch)?;
            let x = normalize(&xi);
            let predicted = net.predict(&x, labels.len());
            correct += predicted
                .iter()
                .zip(&labels)
                .filter(|(p, l)| p == l)
                .count();
            loss_sum += net.train_batch(&x, &labels, lr) * labels.len() as f64;
        }

        metrics.push(FpEpochMetrics {
            epoch,
            lr_inverse,
            train_loss: loss_sum / n as f64,
            train_accuracy: correct as f64 / n as f64,
            val_accuracy: fp_evaluate(&net, val)?,
        });
    }
    Ok((net, metrics))
}
