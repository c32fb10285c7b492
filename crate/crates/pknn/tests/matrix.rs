use pknn::matrix::{trunc_div, IntMatrix};
use pknn::rng::Rng;
use pknn::Error;
use proptest::prelude::*;

#[test]
fn zeros_shapes_and_contents() {
    let m = IntMatrix::zeros(2, 3).unwrap();
    assert_eq!(m.shape(), (2, 3));
    assert!(m.as_slice().iter().all(|&v| v == 0));
    assert_eq!(IntMatrix::zeros(1, 1).unwrap().as_slice(), &[0]);
    assert!(matches!(
        IntMatrix::zeros(0, 3),
        Err(Error::InvalidDimension(_))
    ));
}

#[test]
fn trunc_div_rounds_toward_zero() {
    assert_eq!(trunc_div(7, 2).unwrap(), 3);
    assert_eq!(trunc_div(-7, 2).unwrap(), -3);
    assert_eq!(trunc_div(7, -2).unwrap(), -3);
    assert_eq!(trunc_div(-75, 4).unwrap(), -18);
    assert!(matches!(trunc_div(1, 0), Err(Error::DivisionByZero)));
}

#[test]
fn matmul_hand_examples() {
    let a = IntMatrix::from_rows(&[[1, 2], [3, 4]]).unwrap();
    let b = IntMatrix::from_rows(&[[5], [6]]).unwrap();
    assert_eq!(a.matmul(&b).unwrap(), IntMatrix::from_rows(&[[17], [39]]).unwrap());

    let i = IntMatrix::identity(2).unwrap();
    let m = IntMatrix::from_rows(&[[9, -4, 0], [1, 2, 3]]).unwrap();
    assert_eq!(i.matmul(&m).unwrap(), m);
    assert_eq!(m.matmul(&IntMatrix::identity(3).unwrap()).unwrap(), m);

    let bad = IntMatrix::zeros(1, 3).unwrap().matmul(&IntMatrix::zeros(2, 2).unwrap());
    assert!(matches!(bad, Err(Error::ShapeMismatch(_))));
}

#[test]
fn transpose_examples() {
    let m = IntMatrix::from_rows(&[[1, 2], [3, 4]]).unwrap();
    assert_eq!(m.transpose(), IntMatrix::from_rows(&[[1, 3], [2, 4]]).unwrap());
    let row = IntMatrix::from_rows(&[[1, 2, 3]]).unwrap();
    assert_eq!(row.transpose().shape(), (3, 1));
    assert_eq!(m.transpose().transpose(), m);
}

#[test]
fn hadamard_examples() {
    let a = IntMatrix::from_rows(&[[2, 3]]).unwrap();
    let b = IntMatrix::from_rows(&[[4, 5]]).unwrap();
    assert_eq!(a.hadamard(&b).unwrap(), IntMatrix::from_rows(&[[8, 15]]).unwrap());

    let zeros = IntMatrix::zeros(1, 2).unwrap();
    assert_eq!(a.hadamard(&zeros).unwrap(), zeros);
    let mut ones = IntMatrix::zeros(1, 2).unwrap();
    ones.fill(1);
    assert_eq!(a.hadamard(&ones).unwrap(), a);
}

#[test]
fn add_sub_and_broadcast() {
    let a = IntMatrix::from_rows(&[[1, 2]]).unwrap();
    let b = IntMatrix::from_rows(&[[3, 4]]).unwrap();
    assert_eq!(a.add(&b).unwrap(), IntMatrix::from_rows(&[[4, 6]]).unwrap());
    assert_eq!(a.sub(&a).unwrap(), IntMatrix::zeros(1, 2).unwrap());

    let m = IntMatrix::from_rows(&[[1, 2, 3], [4, 5, 6]]).unwrap();
    let row = IntMatrix::from_rows(&[[10, 20, 30]]).unwrap();
    assert_eq!(
        m.add(&row).unwrap(),
        IntMatrix::from_rows(&[[11, 22, 33], [14, 25, 36]]).unwrap()
    );
    assert!(matches!(
        m.add(&IntMatrix::zeros(2, 2).unwrap()),
        Err(Error::ShapeMismatch(_))
    ));
}

#[test]
fn scalar_trunc_div_examples() {
    let m = IntMatrix::from_rows(&[[100, -75]]).unwrap();
    assert_eq!(
        m.scalar_trunc_div(4).unwrap(),
        IntMatrix::from_rows(&[[25, -18]]).unwrap()
    );
    assert_eq!(m.scalar_trunc_div(1).unwrap(), m);
    assert!(matches!(m.scalar_trunc_div(0), Err(Error::DivisionByZero)));
}

#[test]
fn clamp_examples() {
    let m = IntMatrix::from_rows(&[[-200, 0, 200]]).unwrap();
    assert_eq!(
        m.clamp(-127, 127).unwrap(),
        IntMatrix::from_rows(&[[-127, 0, 127]]).unwrap()
    );
    let small = IntMatrix::from_rows(&[[5, -5]]).unwrap();
    assert_eq!(small.clamp(-127, 127).unwrap(), small);
    assert!(matches!(m.clamp(3, -3), Err(Error::InvalidRange { .. })));
}

#[test]
fn random_fill_degenerate_and_deterministic() {
    let mut m = IntMatrix::zeros(4, 4).unwrap();
    let mut rng = Rng::seed_from_u64(7);
    m.random_fill(&mut rng, 5, 5).unwrap();
    assert!(m.as_slice().iter().all(|&v| v == 5));

    let mut a = IntMatrix::zeros(8, 8).unwrap();
    let mut b = IntMatrix::zeros(8, 8).unwrap();
    a.random_fill(&mut Rng::seed_from_u64(42), -8, 8).unwrap();
    b.random_fill(&mut Rng::seed_from_u64(42), -8, 8).unwrap();
    assert_eq!(a, b);

    assert!(matches!(
        m.random_fill(&mut rng, 8, -8),
        Err(Error::InvalidRange { .. })
    ));
}

#[test]
fn random_fill_uniform_statistics() {
    // 10⁴ draws from [-8, 8]: all in range, every value hit, and the
    // empirical mean within 3 standard errors of the exact mean 0
    // (uniform variance (17²−1)/12 = 24 ⇒ 3·σ/√n ≈ 0.147).
    let mut m = IntMatrix::zeros(100, 100).unwrap();
    m.random_fill(&mut Rng::seed_from_u64(1), -8, 8).unwrap();
    assert!(m.as_slice().iter().all(|&v| (-8..=8).contains(&v)));
    for v in -8..=8 {
        assert!(m.as_slice().contains(&v), "value {v} never drawn");
    }
    let mean = m.as_slice().iter().map(|&v| v as f64).sum::<f64>() / 10_000.0;
    assert!(mean.abs() < 0.147, "mean {mean} outside 3 standard errors");
}

#[test]
fn argmax_row_tie_breaks_low() {
    let m = IntMatrix::from_rows(&[[3, 9, 9, 1]]).unwrap();
    assert_eq!(m.argmax_row(0).unwrap(), 1);
    assert_eq!(IntMatrix::from_rows(&[[-5]]).unwrap().argmax_row(0).unwrap(), 0);
    assert_eq!(IntMatrix::from_rows(&[[0, 0, 7]]).unwrap().argmax_row(0).unwrap(), 2);
    assert!(matches!(m.argmax_row(1), Err(Error::IndexOutOfBounds(_))));
}

#[test]
fn column_sums_accumulates() {
    let m = IntMatrix::from_rows(&[[1, 2], [10, 20], [100, 200]]).unwrap();
    assert_eq!(
        m.column_sums().unwrap(),
        IntMatrix::from_rows(&[[111, 222]]).unwrap()
    );
}

#[cfg(feature = "checked")]
#[test]
fn matmul_overflow_detected_in_checked_builds() {
    let mut a = IntMatrix::zeros(1, 2).unwrap();
    a.fill(i32::MAX);
    let mut b = IntMatrix::zeros(2, 1).unwrap();
    b.fill(2);
    assert!(matches!(a.matmul(&b), Err(Error::Overflow { .. })));
}

fn naive_matmul(a: &IntMatrix, b: &IntMatrix) -> Vec<i64> {
    let mut out = vec![0i64; a.rows() * b.cols()];
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            for k in 0..a.cols() {
                out[i * b.cols() + j] += a.get(i, k) as i64 * b.get(k, j) as i64;
            }
        }
    }
    out
}

proptest! {
    #[test]
    fn trunc_div_sign_symmetry(a in -1_000_000i32..1_000_000, b in prop::sample::select(vec![1i32, 2, 3, 4, 7, 8, 64, 1000, -1, -3, -8])) {
        prop_assert_eq!(trunc_div(-a, b).unwrap(), -trunc_div(a, b).unwrap());
        prop_assert_eq!(trunc_div(a, -b).unwrap(), -trunc_div(a, b).unwrap());
    }

    #[test]
    fn matmul_matches_brute_force(
        m in 1usize..=8, k in 1usize..=8, n in 1usize..=8,
        seed in any::<u64>(),
    ) {
        let mut rng = Rng::seed_from_u64(seed);
        let mut a = IntMatrix::zeros(m, k).unwrap();
        let mut b = IntMatrix::zeros(k, n).unwrap();
        a.random_fill(&mut rng, -127, 127).unwrap();
        b.random_fill(&mut rng, -127, 127).unwrap();
        let got = a.matmul(&b).unwrap();
        let want = naive_matmul(&a, &b);
        let got64: Vec<i64> = got.as_slice().iter().map(|&v| v as i64).collect();
        prop_assert_eq!(got64, want);
    }

    #[test]
    fn eight_bit_values_never_overflow_wide_inner_dim(
        inner in prop::sample::select(vec![1usize, 100, 1000, 65_536]),
        seed in any::<u64>(),
    ) {
        // 127·127·2¹⁶ < 2³¹−1, so 8-bit operands with inner dimension up
        // to 2¹⁶ always fit 32-bit accumulation.
        let mut rng = Rng::seed_from_u64(seed);
        let mut a = IntMatrix::zeros(1, inner).unwrap();
        let mut b = IntMatrix::zeros(inner, 1).unwrap();
        a.random_fill(&mut rng, -127, 127).unwrap();
        b.random_fill(&mut rng, -127, 127).unwrap();
        let got = a.matmul(&b);
        prop_assert!(got.is_ok());
        let got64 = got.unwrap().get(0, 0) as i64;
        prop_assert_eq!(got64, naive_matmul(&a, &b)[0]);
    }

    #[test]
    fn identity_is_neutral(r in 1usize..=6, c in 1usize..=6, seed in any::<u64>()) {
        let mut rng = Rng::seed_from_u64(seed);
        let mut m = IntMatrix::zeros(r, c).unwrap();
        m.random_fill(&mut rng, -127, 127).unwrap();
        prop_assert_eq!(IntMatrix::identity(r).unwrap().matmul(&m).unwrap(), m.clone());
        prop_assert_eq!(m.matmul(&IntMatrix::identity(c).unwrap()).unwrap(), m);
    }
}
