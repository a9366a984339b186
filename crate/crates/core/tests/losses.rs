mod common;

use common::{rng, unit_vector};
use dgmae::autodiff::Tape;
use dgmae::loss::{pull_push_identity_check, sce, LossConfig, COSINE_EPS};
use dgmae::Matrix;
use proptest::prelude::*;
use rand::Rng;

fn sce_value(pred: &Matrix, target: &Matrix, gamma: f64) -> f64 {
    let mut tape = Tape::new();
    let p = tape.constant(pred.clone());
    let rows: Vec<usize> = (0..pred.rows()).collect();
    let l = sce(&mut tape, p, target, &rows, gamma, COSINE_EPS).unwrap();
    tape.scalar(l)
}

#[test]
fn pull_push_identity_on_random_instances() {
    let mut r = rng(404);
    for trial in 0..100 {
        let d = r.random_range(2..16);
        let k = r.random_range(1..10);
        let z = Matrix::randn(1, d, &mut r).scale(r.random_range(0.1..3.0));
        let x_i = unit_vector(d, &mut r);
        let nbrs: Vec<Vec<f64>> = (0..k).map(|_| unit_vector(d, &mut r)).collect();
        let refs: Vec<&[f64]> = nbrs.iter().map(|v| v.as_slice()).collect();
        let pp = pull_push_identity_check(z.row(0), &x_i, &refs).unwrap();
        let gap = (pp.lhs - (pp.pull_push - pp.offset)).abs();
        assert!(gap <= 1e-9, "trial {trial}: gap {gap:e}");
    }
}

#[test]
fn pull_push_requires_unit_vectors() {
    let z = [1.0, 0.0];
    assert!(pull_push_identity_check(&z, &[2.0, 0.0], &[&[1.0, 0.0]]).is_err());
    assert!(pull_push_identity_check(&z, &[1.0, 0.0], &[&[0.0, 0.5]]).is_err());
}

#[test]
fn zero_rows_cost_one() {
    let pred = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]);
    let target = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]);
    assert!((sce_value(&pred, &target, 2.0) - 0.5).abs() < 1e-15);
}

#[test]
fn gamma_below_one_is_rejected() {
    assert!(LossConfig::new(0.5, 2.0, 0.5).is_err());
    assert!(LossConfig::new(1.0, 1.0, 0.5).is_ok());
    assert!(LossConfig::new(2.0, 2.0, 1.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sce_is_invariant_to_positive_row_scaling(seed in any::<u64>(), s in 0.01f64..100.0, t in 0.01f64..100.0) {
        let mut r = rng(seed);
        let pred = Matrix::randn(6, 4, &mut r);
        let target = Matrix::randn(6, 4, &mut r);
        let base = sce_value(&pred, &target, 2.0);
        let scaled = sce_value(&pred.scale(s), &target.scale(t), 2.0);
        prop_assert!((base - scaled).abs() <= 1e-12);
        prop_assert!((0.0..=4.0).contains(&base));
    }

    #[test]
    fn sce_grows_as_alignment_drops(a in 0.0f64..std::f64::consts::PI, b in 0.0f64..std::f64::consts::PI, gamma in 1.0f64..4.0) {
        let target = Matrix::from_rows(&[[1.0, 0.0]]);
        let at = |angle: f64| Matrix::from_rows(&[[angle.cos(), angle.sin()]]);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(sce_value(&at(lo), &target, gamma) <= sce_value(&at(hi), &target, gamma) + 1e-15);
    }

    #[test]
    fn larger_gamma_down_weights_easy_rows(seed in any::<u64>(), g1 in 1.0f64..3.0, dg in 0.0f64..3.0) {
        // For cosine above 0 the per-row error is below 1, so raising the
        // exponent can only shrink it.
        let mut r = rng(seed);
        let target = Matrix::randn(5, 3, &mut r);
        let pred = target.zip_map(&Matrix::randn(5, 3, &mut r), "noise", |t, e| t + 0.3 * e).unwrap();
        let cos_positive = (0..5).all(|i| dgmae::matrix::cosine(pred.row(i), target.row(i), COSINE_EPS) > 0.0);
        prop_assume!(cos_positive);
        prop_assert!(sce_value(&pred, &target, g1 + dg) <= sce_value(&pred, &target, g1) + 1e-15);
    }
}
