use crate::error::{Error, Result};

use super::matrix::Matrix;
use super::triangular::UpperTriangular;

/// Relative threshold on `|R_ii| / ||X||_F` below which `qf` reports
/// [`Error::RankDeficient`].
pub const RANK_TOL: f64 = 1e-10;

/// Thin QR factorization `X = Q R` (`Q` is `m x n`, `R` is `n x n`) with the
/// sign convention that every diagonal entry of `R` is positive.
///
/// Householder QR first, then column flips of `Q` / row flips of `R` wherever
/// `R_ii < 0`.
pub fn qf(x: &Matrix) -> Result<(Matrix, UpperTriangular)> {
    let (m, n) = x.shape();
    if m < n {
        return Err(Error::ShapeMismatch(format!(
            "qf needs rows >= cols, got {m}x{n}"
        )));
    }
    let scale = x.frobenius_norm();
    let mut a = x.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);

    for k in 0..n {
        let mut v: Vec<f64> = (k..m).map(|i| a[(i, k)]).collect();
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|t| t * t).sum();
        apply_reflector(&mut a, k, k, &v, vnorm_sq);
        reflectors.push(v);
    }

    let mut r = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r[(i, j)] = a[(i, j)];
        }
    }

    let mut q = Matrix::eye(m, n);
    for (k, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        let vnorm_sq: f64 = v.iter().map(|t| t * t).sum();
        apply_reflector(&mut q, k, 0, v, vnorm_sq);
    }

    for i in 0..n {
        let d = r[(i, i)];
        if !(d.abs() >= RANK_TOL * scale) || d == 0.0 {
            return Err(Error::RankDeficient { index: i, value: d });
        }
        if d < 0.0 {
            for j in i..n {
                r[(i, j)] = -r[(i, j)];
            }
            for row in 0..m {
                q[(row, i)] = -q[(row, i)];
            }
        }
    }
    Ok((q, UpperTriangular::from_upper_part(&r)))
}

/// Applies `I - 2 v v^T / |v|^2` to rows `row0..` of `a`, touching columns
/// `col0..` only.
fn apply_reflector(a: &mut Matrix, row0: usize, col0: usize, v: &[f64], vnorm_sq: f64) {
    let cols = a.cols();
    let mut w = vec![0.0; cols - col0];
    for (t, &vi) in v.iter().enumerate() {
        for (wj, &x) in w.iter_mut().zip(&a.row(row0 + t)[col0..]) {
            *wj += vi * x;
        }
    }
    let c = 2.0 / vnorm_sq;
    for (t, &vi) in v.iter().enumerate() {
        let f = c * vi;
        for (x, &wj) in a.row_mut(row0 + t)[col0..].iter_mut().zip(&w) {
            *x -= f * wj;
        }
    }
}
