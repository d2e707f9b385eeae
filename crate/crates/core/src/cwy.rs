//! Compact WY form of a product of Householder reflections:
//! `H(v_1) ... H(v_L) = I - U S^{-1} U^T` with `U` the normalized vectors and
//! `S = I/2 + striu(U^T U)`.

use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::flops::{NoTally, Tally};
use crate::householder::{check_norm, decompose, HouseholderStack};
use crate::linalg::{
    gemm, matrix_exp, product, triangular_solve_counted, MatView, Matrix, SkewParam,
    UpperTriangular,
};

/// Block size for the strictly upper Gram product.
const GRAM_BLOCK: usize = 64;

/// Precomputed apply state for one stack.
#[derive(Debug, Clone)]
pub struct CwyFactors {
    u: Matrix,
    ut: Matrix,
    s: UpperTriangular,
    source_norms: Vec<f64>,
    s_inv: OnceLock<Matrix>,
}

impl CwyFactors {
    pub fn n(&self) -> usize {
        self.u.rows()
    }

    pub fn l(&self) -> usize {
        self.u.cols()
    }

    /// `N x L`, unit columns.
    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn s(&self) -> &UpperTriangular {
        &self.s
    }

    pub fn source_norms(&self) -> &[f64] {
        &self.source_norms
    }

    /// Explicit `S^{-1}`, computed once and reused by [`rollout`].
    pub fn s_inverse(&self) -> &Matrix {
        self.s_inv.get_or_init(|| {
            self.s
                .inverse()
                .expect("S has diagonal 1/2 and is never singular")
                .into_matrix()
        })
    }
}

/// Normalizes the vectors and forms `S`.
pub fn build_factors(stack: &HouseholderStack) -> Result<CwyFactors> {
    build_factors_counted(stack, &NoTally)
}

pub(crate) fn build_factors_counted<T: Tally + ?Sized>(
    stack: &HouseholderStack,
    tally: &T,
) -> Result<CwyFactors> {
    let (n, l) = (stack.n(), stack.l());
    let mut ut = Matrix::zeros(l, n);
    let mut source_norms = Vec::with_capacity(l);
    for (index, v) in stack.vectors().iter().enumerate() {
        let nv = check_norm(index, v)?;
        for (dst, &x) in ut.row_mut(index).iter_mut().zip(v) {
            *dst = x / nv;
        }
        source_norms.push(nv);
    }
    tally.add((3 * n * l) as u64);
    let s = strict_upper_gram(&ut, tally);
    Ok(CwyFactors {
        u: ut.transpose(),
        ut,
        s,
        source_norms,
        s_inv: OnceLock::new(),
    })
}

/// `I/2 + striu(U^T U)` from the rows of `U^T`, computing only the blocks
/// on or above the diagonal.
fn strict_upper_gram<T: Tally + ?Sized>(ut: &Matrix, tally: &T) -> UpperTriangular {
    let (l, n) = ut.shape();
    let mut s = Matrix::zeros(l, l);
    for b0 in (0..l).step_by(GRAM_BLOCK) {
        let b1 = (b0 + GRAM_BLOCK).min(l);
        for i in b0..b1 {
            for j in i + 1..b1 {
                s[(i, j)] = dot(ut.row(i), ut.row(j));
            }
        }
        tally.add(((b1 - b0) * (b1 - b0 - 1) * n) as u64);
        if b1 < l {
            let rows = MatView::strided(&ut.as_slice()[b0 * n..], b1 - b0, n, n, 1);
            let cols = MatView::strided(&ut.as_slice()[b1 * n..], l - b1, n, n, 1).t();
            let block = product(rows, cols, tally);
            for i in b0..b1 {
                s.row_mut(i)[b1..].copy_from_slice(block.row(i - b0));
            }
        }
    }
    for i in 0..l {
        s[(i, i)] = 0.5;
    }
    UpperTriangular::from_upper_part(&s)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x - U S^{-1} U^T x` for every column of `x` at once: two GEMMs and one
/// triangular solve with `x.cols()` right-hand sides.
pub fn apply(f: &CwyFactors, x: &Matrix) -> Result<Matrix> {
    apply_counted(f, x, &NoTally)
}

pub(crate) fn apply_counted<T: Tally + ?Sized>(
    f: &CwyFactors,
    x: &Matrix,
    tally: &T,
) -> Result<Matrix> {
    if x.rows() != f.n() {
        return Err(Error::DimensionMismatch {
            op: "cwy_apply",
            expected: (f.n(), x.cols()),
            got: x.shape(),
        });
    }
    let projected = product(f.ut.view(), x.view(), tally);
    let w = triangular_solve_counted(&f.s, &projected, tally)?;
    let mut out = x.clone();
    gemm(-1.0, f.u.view(), w.view(), 1.0, out.as_mut_slice(), tally);
    Ok(out)
}

/// The dense `N x N` matrix `I - U (S^{-1} U^T)`.
pub fn materialize(f: &CwyFactors) -> Matrix {
    materialize_counted(f, &NoTally)
}

pub(crate) fn materialize_counted<T: Tally + ?Sized>(f: &CwyFactors, tally: &T) -> Matrix {
    let w =
        triangular_solve_counted(&f.s, &f.ut, tally).expect("S has diagonal 1/2 and matches U^T");
    let mut q = Matrix::identity(f.n());
    gemm(-1.0, f.u.view(), w.view(), 1.0, q.as_mut_slice(), tally);
    q
}

/// Elementwise activation for [`rollout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlinearity {
    Tanh,
    Relu,
    Abs,
    Identity,
}

impl Nonlinearity {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Tanh => x.tanh(),
            Nonlinearity::Relu => x.max(0.0),
            Nonlinearity::Abs => x.abs(),
            Nonlinearity::Identity => x,
        }
    }
}

/// Recurrent rollout `h_t = sigma(Q h_{t-1} + b + V x_t)` for `t = 1..T`,
/// with `Q h` evaluated as `h - U (S^{-1} (U^T h))`. Returns the hidden
/// states as the rows of a `T x N` matrix.
pub fn rollout(
    f: &CwyFactors,
    h0: &[f64],
    inputs: &Matrix,
    v_in: &Matrix,
    b: &[f64],
    nonlinearity: Nonlinearity,
) -> Result<Matrix> {
    let n = f.n();
    let t_len = inputs.rows();
    let shape_err = |what: &str| Error::ShapeMismatch(format!("rollout: {what}"));
    if h0.len() != n || b.len() != n {
        return Err(shape_err("h0 and b must have length N"));
    }
    if v_in.rows() != n || v_in.cols() != inputs.cols() {
        return Err(shape_err("V must be N x N_in with N_in = inputs.cols()"));
    }
    let drive = inputs.matmul_t(v_in);
    let s_inv = f.s_inverse();
    let mut h = h0.to_vec();
    let mut out = Matrix::zeros(t_len, n);
    for t in 0..t_len {
        let u_t: Vec<f64> = (0..f.l()).map(|i| dot(f.ut.row(i), &h)).collect();
        let v_t: Vec<f64> = (0..f.l()).map(|i| dot(s_inv.row(i), &u_t)).collect();
        for (i, hi) in h.iter_mut().enumerate() {
            let y = *hi - dot(f.u.row(i), &v_t) + b[i];
            *hi = nonlinearity.eval(y + drive[(t, i)]);
        }
        out.row_mut(t).copy_from_slice(&h);
    }
    Ok(out)
}

/// Gradient of `f(Q)` with respect to each raw vector `v_l`, given
/// `upstream = df/dQ` at the materialized `Q`.
pub fn grad(stack: &HouseholderStack, upstream: &Matrix) -> Result<Vec<Vec<f64>>> {
    let n = stack.n();
    upstream.check_shape("cwy_grad", (n, n))?;
    let f = build_factors(stack)?;
    let w = f.s_inverse();
    let u = &f.u;
    // dQ = -dU W U^T - U W dU^T + U W dS W U^T, dS = striu(dU^T U + U^T dU).
    let gu = upstream.matmul(u);
    let gtu = upstream.t_matmul(u);
    let p = w.t_matmul(&u.t_matmul(&gu)).matmul_t(w);
    let pu = strictly_upper(&p);
    let sym = pu.add(&pu.transpose());
    let mut du = u.matmul(&sym);
    du.add_scaled(-1.0, &gu.matmul_t(w));
    du.add_scaled(-1.0, &gtu.matmul(w));
    Ok(chain_normalization(&f, &du))
}

pub(crate) fn strictly_upper(p: &Matrix) -> Matrix {
    Matrix::from_fn(
        p.rows(),
        p.cols(),
        |i, j| if j > i { p[(i, j)] } else { 0.0 },
    )
}

/// `df/dv_l = (I - u_l u_l^T) df/du_l / |v_l|`.
pub(crate) fn chain_normalization(f: &CwyFactors, du: &Matrix) -> Vec<Vec<f64>> {
    (0..f.l())
        .map(|l| {
            let ul = f.ut.row(l);
            let gl = du.column(l);
            let proj = dot(ul, &gl);
            let nv = f.source_norms[l];
            gl.iter()
                .zip(ul)
                .map(|(g, u)| (g - proj * u) / nv)
                .collect()
        })
        .collect()
}

/// Householder vectors reproducing `q`; see [`decompose`].
pub fn init_from_orthogonal(q: &Matrix) -> Result<HouseholderStack> {
    decompose(q)
}

/// `exp(X - X^T)` with standard normal `X`, decomposed into `N` vectors.
///
/// The exponential always has determinant `+1`, so this succeeds only for
/// even `N`; odd `N` yields [`Error::WrongDeterminant`].
pub fn init_skew_exp<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<HouseholderStack> {
    let q = matrix_exp(&SkewParam::random(n, rng))?;
    decompose(&q)
}
