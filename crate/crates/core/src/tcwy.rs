//! Truncated compact WY: the first `M` columns of a CWY matrix, computed as
//! `[I; 0] - U S^{-1} U_1^T` without forming anything `N x N`. Also the
//! inverse decomposition of a Stiefel point and the convolutional recurrent
//! kernel constraint.

use crate::cwy::{build_factors_counted, chain_normalization, strictly_upper, Nonlinearity};
use crate::error::{Error, Result};
use crate::flops::{NoTally, Tally};
use crate::householder::{reduce_column, HouseholderStack};
use crate::linalg::{gemm, spectral_norm, triangular_solve_counted, Matrix};

/// Default manifold tolerance factor: `|W^T W - I|_F <= STIEFEL_TOL * M`.
pub const STIEFEL_TOL: f64 = 1e-10;

/// Allowed deviation of a reduced column from `e_1` in [`decompose_stiefel`].
pub const STIEFEL_DRIFT_TOL: f64 = 1e-9;

/// Relative slack in [`check_conv_bound`].
pub const CONV_BOUND_SLACK: f64 = 1e-9;

/// `N x M` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    omega: Matrix,
}

impl StiefelPoint {
    /// Checks `|W^T W - I|_F <= 1e-10 * M`.
    pub fn new(omega: Matrix) -> Result<Self> {
        let m = omega.cols().max(1) as f64;
        Self::with_tolerance(omega, STIEFEL_TOL * m)
    }

    pub fn with_tolerance(omega: Matrix, tol: f64) -> Result<Self> {
        if omega.rows() < omega.cols() {
            return Err(Error::ShapeMismatch(format!(
                "Stiefel point needs N >= M, got {}x{}",
                omega.rows(),
                omega.cols()
            )));
        }
        let residual = omega.orthogonality_residual();
        if !(residual <= tol) {
            return Err(Error::NotOnManifold { residual });
        }
        Ok(Self { omega })
    }

    /// Trusts the caller; used for retraction outputs, whose accumulated
    /// drift is measured rather than enforced.
    pub(crate) fn from_trusted(omega: Matrix) -> Self {
        Self { omega }
    }

    /// `[I; 0]`.
    pub fn canonical(n: usize, m: usize) -> Result<Self> {
        Self::new(Matrix::eye(n, m))
    }

    pub fn n(&self) -> usize {
        self.omega.rows()
    }

    pub fn m(&self) -> usize {
        self.omega.cols()
    }

    pub fn omega(&self) -> &Matrix {
        &self.omega
    }

    pub fn into_matrix(self) -> Matrix {
        self.omega
    }

    pub fn residual(&self) -> f64 {
        self.omega.orthogonality_residual()
    }
}

fn require_strict(n: usize, m: usize) -> Result<()> {
    if m >= n {
        return Err(Error::RequiresStrictTruncation { n, m });
    }
    Ok(())
}

/// `[I; 0] - U S^{-1} U_1^T` for a stack of `M < N` vectors.
pub fn gamma(stack: &HouseholderStack) -> Result<StiefelPoint> {
    gamma_counted(stack, &NoTally)
}

pub(crate) fn gamma_counted<T: Tally + ?Sized>(
    stack: &HouseholderStack,
    tally: &T,
) -> Result<StiefelPoint> {
    let (n, m) = (stack.n(), stack.l());
    require_strict(n, m)?;
    let f = build_factors_counted(stack, tally)?;
    // U^T restricted to its first M columns is U_1^T.
    let u1t = f.u().block(0, 0, m, m).transpose();
    let w = triangular_solve_counted(f.s(), &u1t, tally)?;
    let mut omega = Matrix::eye(n, m);
    gemm(
        -1.0,
        f.u().view(),
        w.view(),
        1.0,
        omega.as_mut_slice(),
        tally,
    );
    Ok(StiefelPoint::from_trusted(omega))
}

/// `M` vectors with `gamma(vectors) = omega`, found by reducing the columns
/// of `omega` one at a time to the canonical basis.
pub fn decompose_stiefel(omega: &StiefelPoint) -> Result<HouseholderStack> {
    let (n, m) = (omega.n(), omega.m());
    require_strict(n, m)?;
    if m == 0 {
        return Err(Error::InvalidStack { n, l: 0 });
    }
    let residual = omega.residual();
    if !(residual <= STIEFEL_TOL * m as f64) {
        return Err(Error::NotOnManifold { residual });
    }
    let mut a = omega.omega().clone();
    let vectors = (0..m)
        .map(|k| reduce_column(&mut a, k, STIEFEL_DRIFT_TOL))
        .collect::<Result<Vec<_>>>()?;
    HouseholderStack::new(n, vectors)
}

/// Gradient of `f(gamma(v))` with respect to each raw vector, given
/// `upstream = df/dOmega` (`N x M`).
pub fn gamma_grad(stack: &HouseholderStack, upstream: &Matrix) -> Result<Vec<Vec<f64>>> {
    let (n, m) = (stack.n(), stack.l());
    require_strict(n, m)?;
    upstream.check_shape("gamma_grad", (n, m))?;
    let f = build_factors_counted(stack, &NoTally)?;
    let w = f.s_inverse();
    let u = f.u();
    let u1 = u.block(0, 0, m, m);
    // dOmega = -dU W U1^T - U W dU1^T + U W dS W U1^T.
    let gu1 = upstream.matmul(&u1);
    let p = w.t_matmul(&u.t_matmul(&gu1)).matmul_t(w);
    let pu = strictly_upper(&p);
    let mut du = u.matmul(&pu.add(&pu.transpose()));
    du.add_scaled(-1.0, &gu1.matmul_t(w));
    let top = upstream.t_matmul(u).matmul(w);
    for i in 0..m {
        for (d, t) in du.row_mut(i).iter_mut().zip(top.row(i)) {
            *d -= t;
        }
    }
    Ok(chain_normalization(&f, &du))
}

/// Convolution kernel `K[l, p, i, j]` of spatial size `q x q`, mapping
/// `f_in` channels to `f_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    q: usize,
    f_in: usize,
    f_out: usize,
    data: Vec<f64>,
}

impl ConvKernel {
    pub fn new(q: usize, f_in: usize, f_out: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != q * q * f_in * f_out {
            return Err(Error::ShapeMismatch(format!(
                "kernel {q}x{q}x{f_in}x{f_out} needs {} entries, got {}",
                q * q * f_in * f_out,
                data.len()
            )));
        }
        Ok(Self {
            q,
            f_in,
            f_out,
            data,
        })
    }

    pub fn zeros(q: usize, f_in: usize, f_out: usize) -> Self {
        Self {
            q,
            f_in,
            f_out,
            data: vec![0.0; q * q * f_in * f_out],
        }
    }

    /// Inverse of [`reshape_kernel`].
    pub fn from_reshaped(q: usize, k_hat: &Matrix) -> Result<Self> {
        let f = k_hat.cols();
        k_hat.check_shape("kernel_from_reshaped", (q * q * f, f))?;
        let mut k = Self::zeros(q, f, f);
        for l in 0..q {
            for p in 0..q {
                for i in 0..f {
                    for j in 0..f {
                        *k.get_mut(l, p, i, j) = k_hat[(l * q * f + p * f + i, j)];
                    }
                }
            }
        }
        Ok(k)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn f_in(&self) -> usize {
        self.f_in
    }

    pub fn f_out(&self) -> usize {
        self.f_out
    }

    fn offset(&self, l: usize, p: usize, i: usize, j: usize) -> usize {
        ((l * self.q + p) * self.f_in + i) * self.f_out + j
    }

    pub fn get(&self, l: usize, p: usize, i: usize, j: usize) -> f64 {
        self.data[self.offset(l, p, i, j)]
    }

    pub fn get_mut(&mut self, l: usize, p: usize, i: usize, j: usize) -> &mut f64 {
        let o = self.offset(l, p, i, j);
        &mut self.data[o]
    }
}

/// `q^2 f_out x f_out` matrix with `K_hat[l q f_out + p f_out + i, j] = K[l, p, i, j]`.
pub fn reshape_kernel(k: &ConvKernel) -> Result<Matrix> {
    if k.f_in != k.f_out {
        return Err(Error::ShapeMismatch(format!(
            "reshape needs a square-channel kernel, got f_in = {}, f_out = {}",
            k.f_in, k.f_out
        )));
    }
    let (q, f) = (k.q, k.f_out);
    Ok(Matrix::from_fn(q * q * f, f, |row, j| {
        let (l, rest) = (row / (q * f), row % (q * f));
        k.get(l, rest / f, rest % f, j)
    }))
}

/// `h x w x channels` feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    h: usize,
    w: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(h: usize, w: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != h * w * channels {
            return Err(Error::ShapeMismatch(format!(
                "feature map {h}x{w}x{channels} needs {} entries, got {}",
                h * w * channels,
                data.len()
            )));
        }
        Ok(Self {
            h,
            w,
            channels,
            data,
        })
    }

    pub fn zeros(h: usize, w: usize, channels: usize) -> Self {
        Self {
            h,
            w,
            channels,
            data: vec![0.0; h * w * channels],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.h, self.w, self.channels)
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[(i * self.w + j) * self.channels + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// Same-size convolution with zero padding:
/// `(K * G)[i, j, c] = sum_{a, b, ch} K[a, b, ch, c] G[i + a - r, j + b - r, ch]`,
/// `r = (q - 1) / 2`.
pub fn convolve(k: &ConvKernel, g: &FeatureMap) -> Result<FeatureMap> {
    if g.channels != k.f_in {
        return Err(Error::ShapeMismatch(format!(
            "kernel expects {} input channels, feature map has {}",
            k.f_in, g.channels
        )));
    }
    let r = (k.q.saturating_sub(1) / 2) as isize;
    let mut out = FeatureMap::zeros(g.h, g.w, k.f_out);
    for i in 0..g.h {
        for j in 0..g.w {
            let base = (i * g.w + j) * k.f_out;
            for a in 0..k.q {
                let si = i as isize + a as isize - r;
                if si < 0 || si >= g.h as isize {
                    continue;
                }
                for b in 0..k.q {
                    let sj = j as isize + b as isize - r;
                    if sj < 0 || sj >= g.w as isize {
                        continue;
                    }
                    for ch in 0..k.f_in {
                        let x = g.get(si as usize, sj as usize, ch);
                        if x == 0.0 {
                            continue;
                        }
                        for c in 0..k.f_out {
                            out.data[base + c] += k.get(a, b, ch, c) * x;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Both sides of `|K * G|_F^2 <= q^2 |K_hat|_2^2 |G|_F^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn check_conv_bound(k: &ConvKernel, g: &FeatureMap) -> Result<ConvBound> {
    let k_hat = reshape_kernel(k)?;
    let lhs = convolve(k, g)?.frobenius_norm_sq();
    let sigma = spectral_norm(&k_hat)?;
    let q = k.q as f64;
    let rhs = q * q * sigma * sigma * g.frobenius_norm_sq();
    Ok(ConvBound {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + CONV_BOUND_SLACK),
    })
}

/// Kernel with `q K_hat = omega`, for `omega` in `St(q^2 f, f)`.
pub fn constrained_kernel(q: usize, omega: &StiefelPoint) -> Result<ConvKernel> {
    ConvKernel::from_reshaped(q, &omega.omega().scale(1.0 / q as f64))
}

/// One recurrent update `G_t = sigma(K * G_{t-1} + K_in * X_t + B)` with a
/// per-channel bias broadcast over positions.
pub fn conv_neru_step(
    k: &ConvKernel,
    k_in: &ConvKernel,
    bias: &[f64],
    g: &FeatureMap,
    x: &FeatureMap,
    nonlinearity: Nonlinearity,
) -> Result<FeatureMap> {
    if k_in.f_out != k.f_out || bias.len() != k.f_out {
        return Err(Error::ShapeMismatch(
            "recurrent kernel, input kernel and bias disagree on output channels".into(),
        ));
    }
    let mut out = convolve(k, g)?;
    let drive = convolve(k_in, x)?;
    if drive.shape() != out.shape() {
        return Err(Error::ShapeMismatch("state and input sizes differ".into()));
    }
    let f = k.f_out;
    for (idx, (o, d)) in out.data.iter_mut().zip(&drive.data).enumerate() {
        *o = nonlinearity.eval(*o + d + bias[idx % f]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_by_hand() {
        let stack = HouseholderStack::new(2, vec![vec![1.0, 0.0]]).unwrap();
        let omega = gamma(&stack).unwrap();
        assert_eq!(omega.omega().as_slice(), &[-1.0, 0.0]);
        let square = HouseholderStack::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            gamma(&square),
            Err(Error::RequiresStrictTruncation { n: 2, m: 2 })
        ));
    }

    #[test]
    fn canonical_point_round_trip() {
        let omega = StiefelPoint::canonical(4, 2).unwrap();
        let stack = decompose_stiefel(&omega).unwrap();
        let back = gamma(&stack).unwrap();
        assert!(back.omega().max_abs_diff(omega.omega()) < 1e-12);
        let minus = StiefelPoint::new(Matrix::column_vector(&[-1.0, 0.0])).unwrap();
        let back = gamma(&decompose_stiefel(&minus).unwrap()).unwrap();
        assert!(back.omega().max_abs_diff(minus.omega()) < 1e-12);
    }

    #[test]
    fn reshape_index_formula() {
        let mut k = ConvKernel::zeros(3, 2, 2);
        *k.get_mut(1, 2, 0, 1) = 1.0;
        let k_hat = reshape_kernel(&k).unwrap();
        assert_eq!(k_hat.shape(), (18, 2));
        assert_eq!(k_hat[(10, 1)], 1.0);
        assert_eq!(k_hat.frobenius_norm_sq(), 1.0);
        assert_eq!(ConvKernel::from_reshaped(3, &k_hat).unwrap(), k);
        assert!(reshape_kernel(&ConvKernel::zeros(1, 2, 3)).is_err());
    }

    #[test]
    fn zero_kernel_bound() {
        let g = FeatureMap::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = check_conv_bound(&ConvKernel::zeros(3, 1, 1), &g).unwrap();
        assert_eq!((b.lhs, b.rhs, b.holds), (0.0, 0.0, true));
    }
}
