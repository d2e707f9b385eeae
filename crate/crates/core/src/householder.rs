//! Householder reflections `H(v) = I - 2 v v^T / |v|^2`, their sequential
//! composition, and the constructive decomposition of an orthogonal matrix
//! into exactly `N` reflections.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::flops::{NoTally, Tally};
use crate::linalg::{det, Matrix};

/// Vectors shorter than this carry no usable direction.
pub const ZERO_VECTOR_TOL: f64 = 1e-12;

/// `|q_1|` at or above `1 - CASE_BOUNDARY` selects the axis-aligned cases of
/// the column reduction.
pub const CASE_BOUNDARY: f64 = 1e-12;

/// Input orthogonality tolerance for [`decompose`], on `|Q^T Q - I|_F`.
pub const ORTHOGONAL_TOL: f64 = 1e-10;

/// Allowed distance between `det(Q)` and `(-1)^N` in [`decompose`].
pub const DET_TOL: f64 = 1e-6;

/// Allowed deviation of a reduced column from `e_1` in [`decompose`].
pub const DRIFT_TOL: f64 = 1e-10;

/// `L` unnormalized Householder vectors in `R^N`, `1 <= L <= N`.
///
/// The represented matrix is `H(v_1) H(v_2) ... H(v_L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholderStack {
    n: usize,
    vectors: Vec<Vec<f64>>,
}

impl HouseholderStack {
    pub fn new(n: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let l = vectors.len();
        if l == 0 || l > n {
            return Err(Error::InvalidStack { n, l });
        }
        for (index, v) in vectors.iter().enumerate() {
            if v.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "vector {index} has length {}, expected {n}",
                    v.len()
                )));
            }
            if let Some(col) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { row: index, col });
            }
            check_norm(index, v)?;
        }
        Ok(Self { n, vectors })
    }

    /// iid standard normal entries; vectors with `|v| < 0.1 sqrt(N)` are
    /// redrawn.
    pub fn random<R: Rng + ?Sized>(n: usize, l: usize, rng: &mut R) -> Result<Self> {
        if l == 0 || l > n {
            return Err(Error::InvalidStack { n, l });
        }
        let floor = 0.1 * (n as f64).sqrt();
        let vectors = (0..l)
            .map(|_| loop {
                let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                if norm(&v) >= floor {
                    break v;
                }
            })
            .collect();
        Ok(Self { n, vectors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        &self.vectors[index]
    }

    pub fn into_vectors(self) -> Vec<Vec<f64>> {
        self.vectors
    }

    pub fn norms(&self) -> Vec<f64> {
        self.vectors.iter().map(|v| norm(v)).collect()
    }

    /// Vectors as the columns of an `N x L` matrix.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_columns(&self.vectors)
    }

    /// Multiplies vector `l` by `factors[l]`. The represented matrix is
    /// unchanged for nonzero factors.
    pub fn scaled(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.l() {
            return Err(Error::ShapeMismatch(format!(
                "{} scale factors for {} vectors",
                factors.len(),
                self.l()
            )));
        }
        let vectors = self
            .vectors
            .iter()
            .zip(factors)
            .map(|(v, c)| v.iter().map(|x| c * x).collect())
            .collect();
        Self::new(self.n, vectors)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn check_norm(index: usize, v: &[f64]) -> Result<f64> {
    let nv = norm(v);
    if !(nv >= ZERO_VECTOR_TOL) {
        return Err(Error::ZeroVector { index, norm: nv });
    }
    Ok(nv)
}

/// `H(v) x`, computed as `x - (2 v^T x / |v|^2) v`.
pub fn reflect(v: &[f64], x: &Matrix) -> Result<Matrix> {
    if v.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            op: "reflect",
            expected: (v.len(), x.cols()),
            got: x.shape(),
        });
    }
    let nv = check_norm(0, v)?;
    let mut out = x.clone();
    reflect_rows(&mut out, 0, v, nv * nv, &NoTally);
    Ok(out)
}

/// Applies `H(v)` in place to rows `row0..row0 + v.len()` of `x`.
pub(crate) fn reflect_rows<T: Tally + ?Sized>(
    x: &mut Matrix,
    row0: usize,
    v: &[f64],
    norm_sq: f64,
    tally: &T,
) {
    let width = x.cols();
    let mut w = vec![0.0; width];
    for (i, &vi) in v.iter().enumerate() {
        if vi != 0.0 {
            for (wj, &xij) in w.iter_mut().zip(x.row(row0 + i)) {
                *wj += vi * xij;
            }
        }
    }
    let c = 2.0 / norm_sq;
    for (i, &vi) in v.iter().enumerate() {
        if vi != 0.0 {
            let f = c * vi;
            for (xij, &wj) in x.row_mut(row0 + i).iter_mut().zip(&w) {
                *xij -= f * wj;
            }
        }
    }
    tally.add((4 * v.len() * width) as u64);
}

/// `H(v_1) ... H(v_L) x` by `L` sequential reflections, `H(v_L)` first.
pub fn apply_stack(stack: &HouseholderStack, x: &Matrix) -> Result<Matrix> {
    apply_stack_counted(stack, x, &NoTally)
}

pub(crate) fn apply_stack_counted<T: Tally + ?Sized>(
    stack: &HouseholderStack,
    x: &Matrix,
    tally: &T,
) -> Result<Matrix> {
    if x.rows() != stack.n() {
        return Err(Error::DimensionMismatch {
            op: "apply_stack",
            expected: (stack.n(), x.cols()),
            got: x.shape(),
        });
    }
    let mut out = x.clone();
    for (index, v) in stack.vectors().iter().enumerate().rev() {
        let nv = check_norm(index, v)?;
        reflect_rows(&mut out, 0, v, nv * nv, tally);
    }
    Ok(out)
}

/// Vector `v` with `H(v) q` parallel to `e_1` and pointing along `+e_1`.
///
/// * `|q_1| < 1 - 1e-12`: `v = q - |q| e_1`, first entry formed without
///   cancellation when `q_1 > 0`;
/// * `q_1` near `+1`: `v = e_d` (last axis), leaving `q` in place;
/// * `q_1` near `-1`: `v = e_1`.
///
/// A length-one `q` yields `[-1]`.
pub(crate) fn reduction_vector(q: &[f64]) -> Vec<f64> {
    let d = q.len();
    if d == 1 {
        return vec![-1.0];
    }
    let q1 = q[0];
    let mut v = vec![0.0; d];
    if q1 >= 1.0 - CASE_BOUNDARY {
        v[d - 1] = 1.0;
    } else if q1 <= -1.0 + CASE_BOUNDARY {
        v[0] = 1.0;
    } else {
        let tail: f64 = q[1..].iter().map(|x| x * x).sum();
        let nq = (q1 * q1 + tail).sqrt();
        v.copy_from_slice(q);
        v[0] = if q1 > 0.0 { -tail / (q1 + nq) } else { q1 - nq };
    }
    v
}

/// Reduces column `k` of `a` (rows `k..`) to `e_1` by one reflection applied
/// to rows `k..` and columns `k..`. Returns the reflection vector padded with
/// `k` leading zeros to length `a.rows()`.
pub(crate) fn reduce_column(a: &mut Matrix, k: usize, tol: f64) -> Result<Vec<f64>> {
    let n = a.rows();
    let q: Vec<f64> = (k..n).map(|i| a[(i, k)]).collect();
    let v = reduction_vector(&q);
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();

    let width = a.cols() - k;
    let mut block = a.block(k, k, n - k, width);
    reflect_rows(&mut block, 0, &v, norm_sq, &NoTally);
    let deviation = (0..n - k)
        .map(|i| (block[(i, 0)] - if i == 0 { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    if !(deviation <= tol) {
        return Err(Error::DecompositionDrift {
            column: k,
            deviation,
        });
    }
    for i in 0..n - k {
        a.row_mut(k + i)[k..].copy_from_slice(block.row(i));
    }

    let mut padded = vec![0.0; n];
    padded[k..].copy_from_slice(&v);
    Ok(padded)
}

/// Writes `Q` as a product of exactly `N` Householder reflections.
///
/// Requires `Q` orthogonal with `det(Q) = (-1)^N`; matrices in the other
/// component are rejected with [`Error::WrongDeterminant`] rather than
/// adjusted.
pub fn decompose(q: &Matrix) -> Result<HouseholderStack> {
    if !q.is_square() || q.rows() == 0 {
        return Err(Error::ShapeMismatch(format!(
            "decompose needs a nonempty square matrix, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    let n = q.rows();
    let residual = q.orthogonality_residual();
    if !(residual <= ORTHOGONAL_TOL) {
        return Err(Error::NotOrthogonal { residual });
    }
    let expected = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let d = det(q)?;
    if !((d - expected).abs() <= DET_TOL) {
        return Err(Error::WrongDeterminant { det: d, expected });
    }
    let mut a = q.clone();
    let vectors = (0..n)
        .map(|k| reduce_column(&mut a, k, DRIFT_TOL))
        .collect::<Result<Vec<_>>>()?;
    HouseholderStack::new(n, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn reflect_by_hand() {
        let x = Matrix::column_vector(&[1.0, 0.0]);
        assert_eq!(reflect(&e(2, 0), &x).unwrap().as_slice(), &[-1.0, 0.0]);
        let y = reflect(&[1.0, 1.0], &x).unwrap();
        assert!(y.max_abs_diff(&Matrix::column_vector(&[0.0, -1.0])) < 1e-15);
        assert!(matches!(
            reflect(&[0.0, 1e-13], &x),
            Err(Error::ZeroVector { .. })
        ));
    }

    #[test]
    fn axis_stack_gives_minus_identity() {
        let s = HouseholderStack::new(2, vec![e(2, 0), e(2, 1)]).unwrap();
        let q = apply_stack(&s, &Matrix::identity(2)).unwrap();
        assert_eq!(q, Matrix::identity(2).scale(-1.0));
    }

    #[test]
    fn stack_validation() {
        assert!(matches!(
            HouseholderStack::new(2, vec![]),
            Err(Error::InvalidStack { n: 2, l: 0 })
        ));
        assert!(matches!(
            HouseholderStack::new(1, vec![vec![1.0], vec![1.0]]),
            Err(Error::InvalidStack { .. })
        ));
        assert!(matches!(
            HouseholderStack::new(2, vec![vec![0.0, 0.0]]),
            Err(Error::ZeroVector { index: 0, .. })
        ));
    }

    #[test]
    fn scalar_minus_one_decomposes_to_minus_one() {
        let s = decompose(&Matrix::from_rows(&[&[-1.0]])).unwrap();
        assert_eq!(s.vectors(), &[vec![-1.0]]);
        assert!(matches!(
            decompose(&Matrix::identity(1)),
            Err(Error::WrongDeterminant { .. })
        ));
    }

    #[test]
    fn canonical_cases_round_trip() {
        for q in [Matrix::identity(2).scale(-1.0), Matrix::identity(4)] {
            let s = decompose(&q).unwrap();
            let back = apply_stack(&s, &Matrix::identity(q.rows())).unwrap();
            assert!(back.max_abs_diff(&q) < 1e-12);
        }
    }

    #[test]
    fn non_orthogonal_input_rejected() {
        let q = Matrix::from_rows(&[&[1.0, 0.1], &[0.0, 1.0]]);
        assert!(matches!(decompose(&q), Err(Error::NotOrthogonal { .. })));
    }
}
