mod common;

use std::f64::consts::PI;

use common::*;
use cwy_core::linalg::{
    cayley, det, matrix_exp, qf, spectral_norm, triangular_solve, Matrix, SkewParam,
    UpperTriangular,
};
use cwy_core::Error;
use proptest::prelude::*;

#[test]
fn triangular_solve_identity() {
    let s = UpperTriangular::new(Matrix::identity(3)).unwrap();
    let b = Matrix::column_vector(&[1.5, -2.0, 7.25]);
    assert_eq!(triangular_solve(&s, &b).unwrap(), b);
}

#[test]
fn triangular_solve_by_hand() {
    let s = UpperTriangular::new(Matrix::from_rows(&[&[2.0, 1.0], &[0.0, 2.0]])).unwrap();
    let x = triangular_solve(&s, &Matrix::column_vector(&[4.0, 2.0])).unwrap();
    assert_eq!(x.as_slice(), &[1.5, 1.0]);
}

#[test]
fn triangular_solve_matches_dense_inverse() {
    let mut rng = rng(10);
    let mut a = gaussian(32, 32, &mut rng).scale(0.1);
    for i in 0..32 {
        a[(i, i)] = 1.0;
        for j in 0..i {
            a[(i, j)] = 0.0;
        }
    }
    let s = UpperTriangular::new(a.clone()).unwrap();
    let mut e1 = Matrix::zeros(32, 1);
    e1[(0, 0)] = 1.0;
    let x = triangular_solve(&s, &e1).unwrap();
    let oracle = naive_matmul(&dense_inverse(&a), &e1);
    assert!(max_abs_diff(&x, &oracle) < 1e-12);
}

#[test]
fn triangular_solve_rejects_zero_diagonal() {
    let s = UpperTriangular::from_upper_part(&Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 0.0]]));
    assert!(matches!(
        triangular_solve(&s, &Matrix::zeros(2, 1)),
        Err(Error::SingularDiagonal { index: 1, .. })
    ));
}

#[test]
fn upper_triangular_rejects_lower_entries() {
    let m = Matrix::from_rows(&[&[1.0, 0.0], &[1e-20, 1.0]]);
    assert!(matches!(
        UpperTriangular::new(m),
        Err(Error::NotUpperTriangular { .. })
    ));
}

#[test]
fn qf_of_identity() {
    let (q, r) = qf(&Matrix::identity(4)).unwrap();
    assert_eq!(q, Matrix::identity(4));
    assert_eq!(r.as_matrix(), &Matrix::identity(4));
}

#[test]
fn qf_forces_positive_r() {
    let (q, r) = qf(&Matrix::from_rows(&[&[-3.0]])).unwrap();
    assert_eq!(q.as_slice(), &[-1.0]);
    assert_eq!(r.as_matrix().as_slice(), &[3.0]);
}

#[test]
fn qf_random_tall() {
    let mut rng = rng(11);
    let x = gaussian(8, 4, &mut rng);
    let (q, r) = qf(&x).unwrap();
    assert!(orth_residual(&q) < 1e-12);
    assert!(max_abs_diff(&naive_matmul(&q, r.as_matrix()), &x) < 1e-12);
    assert!(r.diagonal().iter().all(|&d| d > 0.0));
}

#[test]
fn qf_rejects_rank_deficient() {
    let x = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
    assert!(matches!(qf(&x), Err(Error::RankDeficient { .. })));
}

fn rotation_2x2(a: f64) -> SkewParam {
    SkewParam::from_upper(2, vec![a]).unwrap()
}

#[test]
fn cayley_of_zero_is_identity() {
    assert_eq!(cayley(&SkewParam::zeros(5)).unwrap(), Matrix::identity(5));
}

#[test]
fn cayley_2x2_is_quarter_turn_rotation() {
    let theta = 2.0 * (PI / 8.0).tan();
    let q = cayley(&rotation_2x2(theta)).unwrap();
    // rotation by 2 atan(theta / 2) = pi / 4, sign fixed by A_12 = theta > 0
    let (c, s) = ((PI / 4.0).cos(), (PI / 4.0).sin());
    let expected = Matrix::from_rows(&[&[c, -s], &[s, c]]);
    assert!(max_abs_diff(&q, &expected) < 1e-12, "{q:?}");
}

#[test]
fn cayley_random_orthogonal() {
    let mut rng = rng(12);
    let q = cayley(&SkewParam::random(16, &mut rng)).unwrap();
    assert!(orth_residual(&q) < 1e-12);
}

#[test]
fn exp_of_zero_is_identity() {
    assert_eq!(
        matrix_exp(&SkewParam::zeros(4)).unwrap(),
        Matrix::identity(4)
    );
}

#[test]
fn exp_2x2_closed_form() {
    let q = matrix_exp(&rotation_2x2(PI / 2.0)).unwrap();
    let expected = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
    assert!(max_abs_diff(&q, &expected) < 1e-12, "{q:?}");
}

#[test]
fn exp_inverse_identity() {
    let mut rng = rng(13);
    let a = SkewParam::random(16, &mut rng);
    let prod = naive_matmul(
        &matrix_exp(&a).unwrap(),
        &matrix_exp(&a.scaled(-1.0)).unwrap(),
    );
    assert!(max_abs_diff(&prod, &Matrix::identity(16)) < 1e-11);
}

#[test]
fn skew_param_is_exactly_skew() {
    let mut rng = rng(14);
    let a = SkewParam::random(9, &mut rng).to_matrix();
    assert_eq!(a, a.transpose().scale(-1.0));
}

#[test]
fn spectral_norm_examples() {
    let x = Matrix::from_diag(&[3.0, 1.0]);
    assert!((spectral_norm(&x).unwrap() - 3.0).abs() < 1e-10);

    let mut rng = rng(15);
    let q = random_stiefel(12, 12, &mut rng);
    assert!((spectral_norm(&q).unwrap() - 1.0).abs() < 1e-9);

    let x = gaussian(10, 6, &mut rng);
    let oracle = singular_values(&x)[0];
    assert!((spectral_norm(&x).unwrap() - oracle).abs() < 1e-8 * oracle);
}

#[test]
fn matrix_rejects_bad_data() {
    assert!(matches!(
        Matrix::new(2, 2, vec![1.0; 3]),
        Err(Error::InvalidData {
            rows: 2,
            cols: 2,
            got: 3
        })
    ));
    assert!(matches!(
        Matrix::from_finite(1, 2, vec![1.0, f64::NAN]),
        Err(Error::NonFinite { row: 0, col: 1 })
    ));
}

fn well_conditioned_upper(n: usize, seed: u64) -> Matrix {
    let mut rng = rng(seed);
    let mut a = gaussian(n, n, &mut rng).scale(0.5 / (n as f64).sqrt());
    for i in 0..n {
        a[(i, i)] = 1.0 + a[(i, i)].abs();
        for j in 0..i {
            a[(i, j)] = 0.0;
        }
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triangular_solve_recovers_rhs(n in 1usize..80, k in 1usize..6, seed: u64) {
        let a = well_conditioned_upper(n, seed);
        let b = gaussian(n, k, &mut rng(seed ^ 1));
        let x = triangular_solve(&UpperTriangular::new(a.clone()).unwrap(), &b).unwrap();
        let back = naive_matmul(&a, &x);
        prop_assert!(back.sub(&b).frobenius_norm() <= 1e-12 * b.frobenius_norm().max(1.0));
    }

    #[test]
    fn qf_postconditions(rows in 1usize..40, cols_frac in 0.0f64..=1.0, seed: u64) {
        let cols = ((rows as f64 * cols_frac).ceil() as usize).max(1);
        let x = gaussian(rows, cols, &mut rng(seed));
        let (q, r) = qf(&x).unwrap();
        prop_assert!(orth_residual(&q) < 1e-12 * (cols as f64).max(1.0));
        prop_assert!(max_abs_diff(&naive_matmul(&q, r.as_matrix()), &x) < 1e-12 * x.max_abs().max(1.0) * rows as f64);
        prop_assert!(r.diagonal().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn cayley_and_exp_are_special_orthogonal(n in 1usize..48, scale in 0.01f64..4.0, seed: u64) {
        let a = SkewParam::random(n, &mut rng(seed)).scaled(scale);
        for q in [cayley(&a).unwrap(), matrix_exp(&a).unwrap()] {
            prop_assert!(orth_residual(&q) < 1e-11 * (n as f64).max(1.0));
            prop_assert!((det_oracle(&q) - 1.0).abs() < 1e-9);
            prop_assert!((det(&q).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn spectral_norm_matches_jacobi(rows in 1usize..16, cols in 1usize..16, seed: u64) {
        let x = gaussian(rows, cols, &mut rng(seed));
        let oracle = singular_values(&x)[0];
        let est = spectral_norm(&x).unwrap();
        prop_assert!((est - oracle).abs() <= 1e-8 * oracle.max(1.0), "{est} vs {oracle}");
    }
}

#[test]
fn large_parametrizations_stay_orthogonal() {
    let mut rng = rng(16);
    for n in [128, 256] {
        let a = SkewParam::random(n, &mut rng);
        for q in [cayley(&a).unwrap(), matrix_exp(&a).unwrap()] {
            assert!(q.orthogonality_residual() < 1e-11 * n as f64);
        }
    }
}
