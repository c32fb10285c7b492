//! The floating-point reference network: analytic gradients against
//! central finite differences, softmax sanity, and descent behavior.

use pknn::baseline::{fp_evaluate, fp_metrics_to_csv, fp_train, FpConfig, FpNetwork};
use pknn::data::Dataset;
use pknn::matrix::IntMatrix;
use pknn::rng::Rng;

fn toy_dataset(n: usize, width: usize, classes: usize, seed: u64) -> Dataset {
    let mut rng = Rng::seed_from_u64(seed);
    let mut features = IntMatrix::zeros(n, width).unwrap();
    features.random_fill(&mut rng, 0, 127).unwrap();
    let labels: Vec<usize> = (0..n).map(|_| rng.below(classes as u64) as usize).collect();
    Dataset::new(features, labels).unwrap()
}

fn random_batch(rng: &mut Rng, batch: usize, width: usize, classes: usize) -> (Vec<f64>, Vec<usize>) {
    let x: Vec<f64> = (0..batch * width).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
    let labels: Vec<usize> = (0..batch).map(|_| rng.below(classes as u64) as usize).collect();
    (x, labels)
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut net = FpNetwork::new(&[4, 3, 2], 123).unwrap();
    let mut rng = Rng::seed_from_u64(7);
    let (x, labels) = random_batch(&mut rng, 3, 4, 2);

    let grads = net.grad_on_batch(&x, &labels);
    let eps = 1e-6;
    for _ in 0..10 {
        let layer = rng.below(2) as usize;
        let idx = rng.below(net.param_count(layer) as u64) as usize;
        let original = net.param(layer, idx);

        *net.param_mut(layer, idx) = original + eps;
        let plus = net.loss_on_batch(&x, &labels);
        *net.param_mut(layer, idx) = original - eps;
        let minus = net.loss_on_batch(&x, &labels);
        *net.param_mut(layer, idx) = original;

        let numeric = (plus - minus) / (2.0 * eps);
        let analytic = {
            let l = &grads.dw[layer];
            if idx < l.len() { l[idx] } else { grads.db[layer][idx - l.len()] }
        };
        let denom = numeric.abs().max(analytic.abs()).max(1e-8);
        let rel = (numeric - analytic).abs() / denom;
        assert!(
            rel <= 1e-4,
            "layer {layer} param {idx}: analytic {analytic} vs numeric {numeric} (rel {rel:.2e})"
        );
    }
}

#[test]
fn softmax_rows_sum_to_one() {
    let net = FpNetwork::new(&[5, 4, 3], 9).unwrap();
    let mut rng = Rng::seed_from_u64(10);
    let (x, _) = random_batch(&mut rng, 6, 5, 3);
    let probs = net.forward_probs(&x, 6);
    for s in 0..6 {
        let row = &probs[s * 3..(s + 1) * 3];
        let sum: f64 = row.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "row {s} sums to {sum}");
        assert!(row.iter().all(|&p| p > 0.0));
    }
}

#[test]
fn loss_strictly_decreases_over_first_steps() {
    let mut net = FpNetwork::new(&[6, 5, 3], 31).unwrap();
    let mut rng = Rng::seed_from_u64(32);
    let (x, labels) = random_batch(&mut rng, 8, 6, 3);

    let mut last = net.loss_on_batch(&x, &labels);
    for step in 0..5 {
        net.train_batch(&x, &labels, 0.01);
        let now = net.loss_on_batch(&x, &labels);
        assert!(now < last, "step {step}: {now} not below {last}");
        last = now;
    }
    assert!(net.all_finite());
}

#[test]
fn zero_epochs_reports_initial_state_once() {
    let data = toy_dataset(10, 4, 3, 50);
    let cfg = FpConfig { epochs: 0, ..FpConfig::default() };
    let (net, metrics) = fp_train(&[4, 5, 3], &data, &data, &cfg).unwrap();
    assert_eq!(metrics.len(), 1);
    assert_eq!(metrics[0].epoch, 0);
    let direct = fp_evaluate(&net, &data).unwrap();
    assert_eq!(metrics[0].val_accuracy, direct);
}

#[test]
fn training_runs_deterministically_per_seed() {
    let train_set = toy_dataset(30, 5, 3, 60);
    let val_set = toy_dataset(10, 5, 3, 61);
    let cfg = FpConfig {
        epochs: 3,
        batch_size: 7,
        lr_inverse: 10,
        lr_double_every: 2,
        seed: 4,
        shuffle: true,
    };
    let (_, a) = fp_train(&[5, 6, 3], &train_set, &val_set, &cfg).unwrap();
    let (_, b) = fp_train(&[5, 6, 3], &train_set, &val_set, &cfg).unwrap();
    assert_eq!(fp_metrics_to_csv(&a), fp_metrics_to_csv(&b));
}

#[test]
fn csv_has_integer_trainer_layout_with_zero_overflow() {
    let data = toy_dataset(8, 4, 2, 70);
    let cfg = FpConfig { epochs: 2, batch_size: 4, ..FpConfig::default() };
    let (_, metrics) = fp_train(&[4, 3, 2], &data, &data, &cfg).unwrap();
    let csv = fp_metrics_to_csv(&metrics);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "epoch,lr_inverse,train_loss,train_acc,val_acc,overflow_count"
    );
    for line in lines {
        assert!(line.ends_with(",0"), "fp rows carry no overflow: {line}");
        assert_eq!(line.split(',').count(), 6);
    }
}

#[test]
fn glorot_init_is_seeded_and_bounded() {
    let a = FpNetwork::new(&[30, 20, 10], 5).unwrap();
    let b = FpNetwork::new(&[30, 20, 10], 5).unwrap();
    let c = FpNetwork::new(&[30, 20, 10], 6).unwrap();
    let collect = |n: &FpNetwork| -> Vec<f64> {
        (0..2).flat_map(|l| (0..n.param_count(l)).map(move |i| (l, i))).map(|(l, i)| n.param(l, i)).collect()
    };
    assert_eq!(collect(&a), collect(&b));
    assert_ne!(collect(&a), collect(&c));

    // Weight magnitudes stay inside the Glorot limit √(6/(fan_in+fan_out)).
    let limit0 = (6.0f64 / 50.0).sqrt();
    for i in 0..30 * 20 {
        assert!(a.param(0, i).abs() <= limit0);
    }
    // Biases start at zero.
    for i in 30 * 20..a.param_count(0) {
        assert_eq!(a.param(0, i), 0.0);
    }
}
