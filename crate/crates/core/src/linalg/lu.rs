use crate::error::{Error, Result};

use super::matrix::Matrix;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    /// Fails with [`Error::SolveFailure`] when a pivot is numerically zero
    /// relative to the largest entry of `a`.
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let tiny = f64::EPSILON * a.max_abs() * n as f64;
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if !(pivot > tiny) || pivot == 0.0 {
                return Err(Error::SolveFailure {
                    index: k,
                    pivot: lu[(p, k)],
                });
            }
            if p != k {
                swap_rows(&mut lu, p, k);
                perm.swap(p, k);
                swaps += 1;
            }
            let (upper, lower) = lu.as_mut_slice().split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n..];
            let d = pivot_row[k];
            for row in lower.chunks_exact_mut(n) {
                let factor = row[k] / d;
                row[k] = factor;
                if factor != 0.0 {
                    for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *x -= factor * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn det(&self) -> f64 {
        let d: f64 = self.lu.diagonal().iter().product();
        if self.swaps.is_multiple_of(2) {
            d
        } else {
            -d
        }
    }

    /// Solves `A X = b` for every column of `b`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.dim();
        b.check_shape("lu_solve", (n, b.cols()))?;
        let w = b.cols();
        let mut x = Matrix::zeros(n, w);
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).copy_from_slice(b.row(p));
        }
        let data = x.as_mut_slice();
        // forward: L has a unit diagonal
        for i in 1..n {
            let (done, rest) = data.split_at_mut(i * w);
            let row = &mut rest[..w];
            for j in 0..i {
                let l = self.lu[(i, j)];
                if l != 0.0 {
                    for (r, &v) in row.iter_mut().zip(&done[j * w..(j + 1) * w]) {
                        *r -= l * v;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = data.split_at_mut((i + 1) * w);
            let row = &mut head[i * w..];
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                if u != 0.0 {
                    for (r, &v) in row.iter_mut().zip(&tail[(j - i - 1) * w..(j - i) * w]) {
                        *r -= u * v;
                    }
                }
            }
            let d = self.lu[(i, i)];
            row.iter_mut().for_each(|r| *r /= d);
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.dim()))
    }
}

fn swap_rows(m: &mut Matrix, a: usize, b: usize) {
    let n = m.cols();
    let (lo, hi) = (a.min(b), a.max(b));
    let (first, second) = m.as_mut_slice().split_at_mut(hi * n);
    first[lo * n..(lo + 1) * n].swap_with_slice(&mut second[..n]);
}

/// Determinant via LU; zero for a numerically singular matrix.
pub fn det(a: &Matrix) -> Result<f64> {
    match Lu::factor(a) {
        Ok(lu) => Ok(lu.det()),
        Err(Error::SolveFailure { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}
