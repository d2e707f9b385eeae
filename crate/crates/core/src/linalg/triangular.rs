//! Upper-triangular factors and back-substitution with many right-hand sides.

use crate::error::{Error, Result};
use crate::flops::{NoTally, Tally};

use super::matrix::{gemm, MatView, Matrix};

/// Diagonal entries smaller than this in magnitude make a solve fail.
pub const SINGULAR_DIAGONAL: f64 = 1e-300;

/// Blocks at or below this size are solved by plain back-substitution; larger
/// ones are split and the off-diagonal update goes through GEMM.
const SOLVE_LEAF: usize = 32;

/// Square matrix with exact zeros strictly below the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperTriangular {
    m: Matrix,
}

impl UpperTriangular {
    /// Wraps a dense matrix, rejecting nonzero entries below the diagonal.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "triangular factor must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        for i in 0..m.rows() {
            for j in 0..i {
                if m[(i, j)] != 0.0 {
                    return Err(Error::NotUpperTriangular {
                        row: i,
                        col: j,
                        value: m[(i, j)],
                    });
                }
            }
        }
        Ok(Self { m })
    }

    /// Keeps the upper triangle of `m` (diagonal included) and zeroes the rest.
    pub fn from_upper_part(m: &Matrix) -> Self {
        let mut out = m.clone();
        for i in 0..out.rows() {
            for j in 0..i.min(out.cols()) {
                out[(i, j)] = 0.0;
            }
        }
        Self { m: out }
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.m.diagonal()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Explicit inverse, itself upper triangular.
    pub fn inverse(&self) -> Result<UpperTriangular> {
        let inv = triangular_solve(self, &Matrix::identity(self.dim()))?;
        Ok(UpperTriangular::from_upper_part(&inv))
    }

    fn check_diagonal(&self) -> Result<()> {
        for (i, d) in self.m.diagonal().into_iter().enumerate() {
            if !(d.abs() >= SINGULAR_DIAGONAL) {
                return Err(Error::SingularDiagonal { index: i, value: d });
            }
        }
        Ok(())
    }
}

/// Solves `S X = rhs` by back-substitution; no inverse is formed.
pub fn triangular_solve(s: &UpperTriangular, rhs: &Matrix) -> Result<Matrix> {
    triangular_solve_counted(s, rhs, &NoTally)
}

pub(crate) fn triangular_solve_counted<T: Tally + ?Sized>(
    s: &UpperTriangular,
    rhs: &Matrix,
    tally: &T,
) -> Result<Matrix> {
    if rhs.rows() != s.dim() {
        return Err(Error::DimensionMismatch {
            op: "triangular_solve",
            expected: (s.dim(), rhs.cols()),
            got: rhs.shape(),
        });
    }
    s.check_diagonal()?;
    let mut x = rhs.clone();
    let width = x.cols();
    solve_range(s.as_matrix(), 0, s.dim(), x.as_mut_slice(), width, tally);
    Ok(x)
}

/// Solves rows `lo..hi` of the system in place. `x` holds rows `lo..` of the
/// right-hand side (row-major, `width` columns); rows at or after `hi` are
/// already solved.
fn solve_range<T: Tally + ?Sized>(
    s: &Matrix,
    lo: usize,
    hi: usize,
    x: &mut [f64],
    width: usize,
    tally: &T,
) {
    let len = hi - lo;
    if len <= SOLVE_LEAF {
        back_substitute(s, lo, hi, x, width, tally);
        return;
    }
    let mid = lo + len / 2;
    let (top, bottom) = x.split_at_mut((mid - lo) * width);
    solve_range(s, mid, hi, bottom, width, tally);
    // top -= S[lo..mid, mid..hi] * bottom
    let n = s.cols();
    let s12 = MatView::strided(&s.as_slice()[lo * n + mid..], mid - lo, hi - mid, n, 1);
    let solved = MatView::strided(&bottom[..(hi - mid) * width], hi - mid, width, width, 1);
    gemm(-1.0, s12, solved, 1.0, top, tally);
    solve_range(s, lo, mid, top, width, tally);
}

fn back_substitute<T: Tally + ?Sized>(
    s: &Matrix,
    lo: usize,
    hi: usize,
    x: &mut [f64],
    width: usize,
    tally: &T,
) {
    for i in (lo..hi).rev() {
        let (head, tail) = x.split_at_mut((i - lo + 1) * width);
        let row = &mut head[(i - lo) * width..];
        let srow = s.row(i);
        for j in i + 1..hi {
            let sij = srow[j];
            let xj = &tail[(j - i - 1) * width..(j - i) * width];
            for (r, &v) in row.iter_mut().zip(xj) {
                *r -= sij * v;
            }
        }
        let d = srow[i];
        row.iter_mut().for_each(|r| *r /= d);
        tally.add(((2 * (hi - i - 1) + 1) * width) as u64);
    }
}
