use pknn::loss::{l2_loss_delta, sse_loss, TargetEncoding};
use pknn::matrix::IntMatrix;
use pknn::rng::Rng;
use pknn::Error;
use proptest::prelude::*;

#[test]
fn one_hot_examples() {
    let enc = TargetEncoding::new(4);
    assert_eq!(enc.one_hot(2).unwrap(), IntMatrix::from_rows(&[[0, 0, 127, 0]]).unwrap());
    assert_eq!(TargetEncoding::new(1).one_hot(0).unwrap(), IntMatrix::from_rows(&[[127]]).unwrap());
    assert!(matches!(
        enc.one_hot(5),
        Err(Error::LabelOutOfRange { label: 5, num_classes: 4 })
    ));
}

#[test]
fn one_hot_batch_stacks_rows() {
    let enc = TargetEncoding::new(3);
    let y = enc.one_hot_batch(&[2, 0]).unwrap();
    assert_eq!(y, IntMatrix::from_rows(&[[0, 0, 127], [127, 0, 0]]).unwrap());
}

#[test]
fn custom_encoding_values() {
    let enc = TargetEncoding::with_values(2, 100, -100).unwrap();
    assert_eq!(enc.one_hot(1).unwrap(), IntMatrix::from_rows(&[[-100, 100]]).unwrap());
    assert!(TargetEncoding::with_values(2, 5, 5).is_err());
    assert!(TargetEncoding::with_values(2, 128, 0).is_err());
}

#[test]
fn loss_delta_is_elementwise_difference() {
    let yhat = IntMatrix::from_rows(&[[100, 0]]).unwrap();
    let y = IntMatrix::from_rows(&[[127, 0]]).unwrap();
    assert_eq!(l2_loss_delta(&yhat, &y).unwrap(), IntMatrix::from_rows(&[[-27, 0]]).unwrap());

    assert_eq!(l2_loss_delta(&y, &y).unwrap(), IntMatrix::zeros(1, 2).unwrap());

    let a = IntMatrix::from_rows(&[[1, 2], [3, 4]]).unwrap();
    let b = IntMatrix::from_rows(&[[0, 2], [5, 4]]).unwrap();
    assert_eq!(
        l2_loss_delta(&a, &b).unwrap(),
        IntMatrix::from_rows(&[[1, 0], [-2, 0]]).unwrap()
    );
}

#[test]
fn sse_examples() {
    let a = IntMatrix::from_rows(&[[3]]).unwrap();
    let b = IntMatrix::from_rows(&[[1]]).unwrap();
    assert_eq!(sse_loss(&a, &b).unwrap(), 2);
    assert_eq!(sse_loss(&a, &a).unwrap(), 0);

    let mut full = IntMatrix::zeros(1, 10).unwrap();
    full.fill(127);
    let zeros = IntMatrix::zeros(1, 10).unwrap();
    assert_eq!(sse_loss(&full, &zeros).unwrap(), 80_645);
}

#[test]
fn sse_shape_mismatch() {
    let a = IntMatrix::zeros(1, 2).unwrap();
    let b = IntMatrix::zeros(2, 1).unwrap();
    assert!(matches!(sse_loss(&a, &b), Err(Error::ShapeMismatch(_))));
}

proptest! {
    #[test]
    fn sse_nonnegative_and_zero_iff_equal(seed in any::<u64>(), r in 1usize..=4, c in 1usize..=6) {
        let mut rng = Rng::seed_from_u64(seed);
        let mut a = IntMatrix::zeros(r, c).unwrap();
        let mut b = IntMatrix::zeros(r, c).unwrap();
        a.random_fill(&mut rng, -127, 127).unwrap();
        b.random_fill(&mut rng, -127, 127).unwrap();
        let loss = sse_loss(&a, &b).unwrap();
        prop_assert!(loss >= 0);
        if loss == 0 {
            // Σd²/2 truncates, so 0 admits at most single ±1 disagreements.
            let diffs: i64 = a.as_slice().iter().zip(b.as_slice())
                .map(|(&x, &y)| ((x - y) as i64).pow(2))
                .sum();
            prop_assert!(diffs <= 1);
        }
        prop_assert_eq!(sse_loss(&a, &a).unwrap(), 0);
    }

    #[test]
    fn sse_invariant_under_permutation(seed in any::<u64>(), n in 2usize..=12) {
        let mut rng = Rng::seed_from_u64(seed);
        let mut a = IntMatrix::zeros(1, n).unwrap();
        let mut b = IntMatrix::zeros(1, n).unwrap();
        a.random_fill(&mut rng, -127, 127).unwrap();
        b.random_fill(&mut rng, -127, 127).unwrap();
        let base = sse_loss(&a, &b).unwrap();

        // Apply the same permutation to both via a shuffled index list.
        let mut idx: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut idx);
        let pa: Vec<i32> = idx.iter().map(|&i| a.get(0, i)).collect();
        let pb: Vec<i32> = idx.iter().map(|&i| b.get(0, i)).collect();
        let pa = IntMatrix::from_vec(1, n, pa).unwrap();
        let pb = IntMatrix::from_vec(1, n, pb).unwrap();
        prop_assert_eq!(sse_loss(&pa, &pb).unwrap(), base);
    }
}
