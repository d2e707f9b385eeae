//! Dense linear algebra used by every parametrization.

mod lu;
mod matrix;
mod norm;
mod qr;
mod skew;
mod triangular;

pub use lu::{det, Lu};
pub use matrix::{MatView, Matrix};
pub use norm::{spectral_norm, SPECTRAL_MAX_ITERS, SPECTRAL_TOL};
pub use qr::{qf, RANK_TOL};
pub use skew::{cayley, expm_dense, matrix_exp, SkewParam};
pub use triangular::{triangular_solve, UpperTriangular, SINGULAR_DIAGONAL};

pub(crate) use matrix::{gemm, product};
pub(crate) use triangular::triangular_solve_counted;
