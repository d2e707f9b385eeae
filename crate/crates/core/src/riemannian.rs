//! Riemannian gradient descent on `St(N, M)`.
//!
//! The search direction is `Z = A Omega` for a skew `A = B C^T` that is kept
//! in factored form, so the Cayley retraction only ever solves a `D x D`
//! system (`D = 2M` or `3M`).

use crate::error::{Error, Result};
use crate::linalg::{qf, Lu, Matrix};
use crate::tcwy::StiefelPoint;

/// Tangency tolerance factor: `|Z^T W + W^T Z|_F <= TANGENT_TOL * M`.
pub const TANGENT_TOL: f64 = 1e-9;

/// Inner product on the tangent space used to turn the Euclidean gradient
/// into a Riemannian one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Canonical,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retraction {
    Cayley,
    Qr,
}

/// `Z` with `Z^T Omega` skew-symmetric.
#[derive(Debug, Clone)]
pub struct TangentVector<'a> {
    z: Matrix,
    base: &'a StiefelPoint,
}

impl<'a> TangentVector<'a> {
    pub fn new(base: &'a StiefelPoint, z: Matrix) -> Result<Self> {
        z.check_shape("tangent_vector", (base.n(), base.m()))?;
        let t = Self { z, base };
        let residual = t.skew_residual();
        let tol = TANGENT_TOL * base.m().max(1) as f64;
        if !(residual <= tol) {
            return Err(Error::CheckFailed(format!(
                "direction is not tangent: |Z^T W + W^T Z|_F = {residual:e}"
            )));
        }
        Ok(t)
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    pub fn base(&self) -> &'a StiefelPoint {
        self.base
    }

    pub fn negated(&self) -> Self {
        Self {
            z: self.z.scale(-1.0),
            base: self.base,
        }
    }

    /// `|Z^T Omega + Omega^T Z|_F`.
    pub fn skew_residual(&self) -> f64 {
        let s = self.z.t_matmul(self.base.omega());
        s.add(&s.transpose()).frobenius_norm()
    }

    /// `Tr(Z^T (I - Omega Omega^T / 2) Z)`.
    pub fn canonical_norm_sq(&self) -> f64 {
        let wz = self.base.omega().t_matmul(&self.z);
        self.z.frobenius_norm_sq() - 0.5 * wz.frobenius_norm_sq()
    }
}

/// Skew matrix `B C^T` held as its two `N x D` factors.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankSkew {
    b: Matrix,
    c: Matrix,
}

impl LowRankSkew {
    pub fn new(b: Matrix, c: Matrix) -> Result<Self> {
        if b.shape() != c.shape() {
            return Err(Error::ShapeMismatch(format!(
                "B is {:?} but C is {:?}",
                b.shape(),
                c.shape()
            )));
        }
        Ok(Self { b, c })
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn rank_bound(&self) -> usize {
        self.b.cols()
    }

    /// Folds a step size into `B`.
    pub fn scale(&self, eta: f64) -> Self {
        Self {
            b: self.b.scale(eta),
            c: self.c.clone(),
        }
    }

    /// `B (C^T x)`.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        self.b.matmul(&self.c.t_matmul(x))
    }

    /// Dense `B C^T`; for tests and diagnostics.
    pub fn to_dense(&self) -> Matrix {
        self.b.matmul_t(&self.c)
    }
}

/// Riemannian gradient `Z = A Omega` and the factors of `A`.
///
/// * canonical: `A = G W^T - W G^T`, `B = [G, W]`, `C = [W, -G]`;
/// * euclidean: `A = G W^T - W G^T + W E W^T / 2` with `E = G^T W - W^T G`,
///   `B = [G, W, W E / 2]`, `C = [W, -G, W]`.
///
/// The factors carry no step size.
pub fn project_gradient<'a>(
    omega: &'a StiefelPoint,
    euclid_grad: &Matrix,
    metric: Metric,
) -> Result<(TangentVector<'a>, LowRankSkew)> {
    let w = omega.omega();
    let g = euclid_grad;
    g.check_shape("project_gradient", w.shape())?;
    let gtw = g.t_matmul(w);
    let mut z = g.sub(&w.matmul(&gtw));
    let factors = match metric {
        Metric::Canonical => LowRankSkew {
            b: g.hstack(w),
            c: w.hstack(&g.scale(-1.0)),
        },
        Metric::Euclidean => {
            let e = gtw.sub(&gtw.transpose());
            let half_we = w.matmul(&e).scale(0.5);
            z.add_scaled(1.0, &half_we);
            LowRankSkew {
                b: g.hstack(w).hstack(&half_we),
                c: w.hstack(&g.scale(-1.0)).hstack(w),
            }
        }
    };
    Ok((TangentVector { z, base: omega }, factors))
}

/// `Cayley(A) Omega = Omega - B (I + C^T B / 2)^{-1} (C^T Omega)` for
/// `A = B C^T`, with any step size already folded into `B`.
pub fn cayley_retract_smw(omega: &StiefelPoint, factors: &LowRankSkew) -> Result<StiefelPoint> {
    let w = omega.omega();
    factors
        .b
        .check_shape("cayley_retract_smw", (w.rows(), factors.rank_bound()))?;
    let d = factors.rank_bound();
    let mut k = factors.c.t_matmul(&factors.b);
    k.scale_in_place(0.5);
    for i in 0..d {
        k[(i, i)] += 1.0;
    }
    let x = Lu::factor(&k)?.solve(&factors.c.t_matmul(w))?;
    let mut out = w.clone();
    out.add_scaled(-1.0, &factors.b.matmul(&x));
    Ok(StiefelPoint::from_trusted(out))
}

/// `qf(Omega + eta Z)`.
pub fn qr_retract(
    omega: &StiefelPoint,
    direction: &TangentVector<'_>,
    eta: f64,
) -> Result<StiefelPoint> {
    let mut moved = omega.omega().clone();
    moved.add_scaled(eta, direction.z());
    let (q, _) = qf(&moved)?;
    Ok(StiefelPoint::from_trusted(q))
}

/// One descent step. Both retractions move along `-Z`: the Cayley path
/// uses `Cayley(eta A) Omega`, the QR path `qf(Omega - eta Z)`.
pub fn rgd_step(
    omega: &StiefelPoint,
    euclid_grad: &Matrix,
    metric: Metric,
    retraction: Retraction,
    eta: f64,
) -> Result<StiefelPoint> {
    let (z, factors) = project_gradient(omega, euclid_grad, metric)?;
    match retraction {
        Retraction::Cayley => cayley_retract_smw(omega, &factors.scale(eta)),
        Retraction::Qr => qr_retract(omega, &z.negated(), eta),
    }
}
