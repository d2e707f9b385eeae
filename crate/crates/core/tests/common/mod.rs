//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's factorizations or solvers.

#![allow(dead_code, clippy::needless_range_loop)]

use cwy_core::linalg::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Triple-loop product.
pub fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols(), b.rows());
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
    })
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Solves `A X = B` by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_solve(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.rows(), n);
    let w = b.cols();
    let mut aug: Vec<Vec<f64>> = (0..n)
        .map(|i| a.row(i).iter().chain(b.row(i)).copied().collect())
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
            .unwrap();
        aug.swap(col, p);
        let d = aug[col][col];
        assert!(d != 0.0, "oracle solve hit a zero pivot");
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        let pivot_row = aug[col].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            if r != col && row[col] != 0.0 {
                let f = row[col];
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
    }
    Matrix::from_fn(n, w, |i, j| aug[i][n + j])
}

pub fn dense_inverse(a: &Matrix) -> Matrix {
    gauss_solve(a, &Matrix::identity(a.rows()))
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det_oracle(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut m = to_rows(a);
    let mut det = 1.0;
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        if m[p][col] == 0.0 {
            return 0.0;
        }
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// Singular values by one-sided Jacobi rotations, descending.
pub fn singular_values(x: &Matrix) -> Vec<f64> {
    let (m, n) = x.shape();
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| x[(i, j)]).collect())
        .collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|v| v * v).sum();
                let beta: f64 = cols[q].iter().map(|v| v * v).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(a, b)| a * b).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (a, b) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * a - s * b;
                    cols[q][i] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Orthonormal columns by modified Gram-Schmidt, applied twice.
pub fn gram_schmidt(x: &Matrix) -> Matrix {
    let (m, n) = x.shape();
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| x[(i, j)]).collect())
        .collect();
    for _ in 0..2 {
        for j in 0..n {
            for k in 0..j {
                let d: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let ck = cols[k].clone();
                for (a, b) in cols[j].iter_mut().zip(&ck) {
                    *a -= d * b;
                }
            }
            let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
            for a in cols[j].iter_mut() {
                *a /= norm;
            }
        }
    }
    Matrix::from_fn(m, n, |i, j| cols[j][i])
}

pub fn random_stiefel<R: Rng>(n: usize, m: usize, rng: &mut R) -> Matrix {
    gram_schmidt(&gaussian(n, m, rng))
}

/// Random orthogonal matrix with determinant `(-1)^n`.
pub fn random_orthogonal_for_decomposition<R: Rng>(n: usize, rng: &mut R) -> Matrix {
    let mut q = gram_schmidt(&gaussian(n, n, rng));
    let target = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    if det_oracle(&q) * target < 0.0 {
        for i in 0..n {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// Product of reflections applied one by one to a dense identity.
pub fn householder_product(vectors: &[Vec<f64>]) -> Matrix {
    let n = vectors[0].len();
    let mut q = Matrix::identity(n);
    for v in vectors.iter().rev() {
        let nn: f64 = v.iter().map(|x| x * x).sum();
        let h = Matrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            delta - 2.0 * v[i] * v[j] / nn
        });
        q = naive_matmul(&h, &q);
    }
    q
}

/// Central finite differences of `f` at `x`, step `1e-6 max(1, |x_i|)`.
pub fn central_diff(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

/// Dense Cayley retraction `(I + A/2)^{-1} (I - A/2) Omega`.
pub fn dense_cayley_apply(a: &Matrix, omega: &Matrix) -> Matrix {
    let n = a.rows();
    let half = a.scale(0.5);
    let lhs = Matrix::identity(n).add(&half);
    let rhs = naive_matmul(&Matrix::identity(n).sub(&half), omega);
    gauss_solve(&lhs, &rhs)
}

/// Canonical-metric skew generator `G W^T - W G^T`.
pub fn dense_canonical_a(g: &Matrix, w: &Matrix) -> Matrix {
    let gw = naive_matmul(g, &w.transpose());
    gw.sub(&gw.transpose())
}

/// Euclidean-metric skew generator `A2 - A2^T` with
/// `A2 = G W^T - W W^T G W^T / 2`.
pub fn dense_euclidean_a(g: &Matrix, w: &Matrix) -> Matrix {
    let a1 = naive_matmul(g, &w.transpose());
    let wwt = naive_matmul(w, &w.transpose());
    let a2 = a1.sub(&naive_matmul(&wwt, &a1).scale(0.5));
    a2.sub(&a2.transpose())
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `|X^T X - I|_F` computed with the naive product.
pub fn orth_residual(x: &Matrix) -> f64 {
    naive_matmul(&x.transpose(), x)
        .sub(&Matrix::identity(x.cols()))
        .frobenius_norm()
}
