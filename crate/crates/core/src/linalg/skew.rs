//! Skew-symmetric parameters and the two classical maps from `Skew(N)` onto
//! the special orthogonal group: the Cayley transform and the matrix
//! exponential.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::lu::Lu;
use super::matrix::Matrix;

/// Skew-symmetric `dim x dim` matrix stored as its strictly upper triangle,
/// row by row. The materialized matrix is exactly skew.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewParam {
    dim: usize,
    upper: Vec<f64>,
}

impl SkewParam {
    pub fn from_upper(dim: usize, upper: Vec<f64>) -> Result<Self> {
        let expected = dim * dim.saturating_sub(1) / 2;
        if upper.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "skew parameter of dim {dim} needs {expected} entries, got {}",
                upper.len()
            )));
        }
        Ok(Self { dim, upper })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            upper: vec![0.0; dim * dim.saturating_sub(1) / 2],
        }
    }

    /// `X - X^T`.
    pub fn from_difference(x: &Matrix) -> Result<Self> {
        if !x.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "X - X^T needs a square X, got {}x{}",
                x.rows(),
                x.cols()
            )));
        }
        let n = x.rows();
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                upper.push(x[(i, j)] - x[(j, i)]);
            }
        }
        Ok(Self { dim: n, upper })
    }

    /// `X - X^T` with iid standard normal `X`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut upper = Vec::with_capacity(dim * dim.saturating_sub(1) / 2);
        // Draw all of X so the stream matches the dense construction.
        let x: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
        for i in 0..dim {
            for j in i + 1..dim {
                upper.push(x[i * dim + j] - x[j * dim + i]);
            }
        }
        Self { dim, upper }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            upper: self.upper.iter().map(|x| c * x).collect(),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        let n = self.dim;
        let mut m = Matrix::zeros(n, n);
        let mut it = self.upper.iter();
        for i in 0..n {
            for j in i + 1..n {
                let x = *it.next().expect("length checked at construction");
                m[(i, j)] = x;
                m[(j, i)] = -x;
            }
        }
        m
    }
}

/// `(I + A/2)^{-1} (I - A/2)`.
///
/// `I + A/2` is nonsingular for every real skew `A` (its eigenvalues are
/// `1 + i t`), so a solve failure here means the input was not finite.
pub fn cayley(a: &SkewParam) -> Result<Matrix> {
    let half = a.to_matrix().scale(0.5);
    let eye = Matrix::identity(a.dim());
    let lu = Lu::factor(&eye.add(&half))?;
    lu.solve(&eye.sub(&half))
}

/// Max 1-norm handled by the degree-13 Pade approximant without scaling.
const THETA_13: f64 = 5.371_920_351_148_152;

/// Numerator coefficients of the [13/13] Pade approximant to `exp`.
const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Matrix exponential of a skew-symmetric matrix, by scaling and squaring
/// with the diagonal [13/13] Pade approximant.
pub fn matrix_exp(a: &SkewParam) -> Result<Matrix> {
    expm_dense(&a.to_matrix())
}

/// Scaling-and-squaring exponential of a general square matrix.
pub fn expm_dense(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch("expm needs a square matrix".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale(0.5f64.powi(squarings));
    let b = &PADE_13;
    let eye = Matrix::identity(n);
    let a2 = scaled.matmul(&scaled);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);

    let mut inner = a6.scale(b[13]);
    inner.add_scaled(b[11], &a4);
    inner.add_scaled(b[9], &a2);
    let mut odd = a6.matmul(&inner);
    odd.add_scaled(b[7], &a6);
    odd.add_scaled(b[5], &a4);
    odd.add_scaled(b[3], &a2);
    odd.add_scaled(b[1], &eye);
    let u = scaled.matmul(&odd);

    let mut inner = a6.scale(b[12]);
    inner.add_scaled(b[10], &a4);
    inner.add_scaled(b[8], &a2);
    let mut v = a6.matmul(&inner);
    v.add_scaled(b[6], &a6);
    v.add_scaled(b[4], &a4);
    v.add_scaled(b[2], &a2);
    v.add_scaled(b[0], &eye);

    let lu = Lu::factor(&v.sub(&u))?;
    let mut x = lu.solve(&v.add(&u))?;
    for _ in 0..squarings {
        x = x.matmul(&x);
    }
    Ok(x)
}

fn one_norm(a: &Matrix) -> f64 {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
