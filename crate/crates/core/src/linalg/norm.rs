use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::matrix::Matrix;

pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITERS: usize = 10_000;

/// Largest singular value of `x` by power iteration on `X^T X`.
///
/// Stops when the Rayleigh quotient changes by less than `1e-10` relative.
/// The starting vector is a fixed pseudo-random draw, so the result is
/// deterministic.
pub fn spectral_norm(x: &Matrix) -> Result<f64> {
    let (m, n) = x.shape();
    if m == 0 || n == 0 {
        return Err(Error::ShapeMismatch(
            "spectral_norm of an empty matrix".into(),
        ));
    }
    if x.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = Matrix::from_fn(n, 1, |_, _| rng.random_range(0.5..1.5));
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..SPECTRAL_MAX_ITERS {
        let w = x.t_matmul(&x.matmul(&v));
        let next = v.dot(&w);
        v = w;
        if normalize(&mut v) == 0.0 {
            return Ok(0.0);
        }
        if (next - lambda).abs() <= SPECTRAL_TOL * next.abs() {
            return Ok(next.max(0.0).sqrt());
        }
        lambda = next;
    }
    Err(Error::NoConvergence {
        estimate: lambda.max(0.0).sqrt(),
        iterations: SPECTRAL_MAX_ITERS,
    })
}

fn normalize(v: &mut Matrix) -> f64 {
    let norm = v.frobenius_norm();
    if norm > 0.0 {
        v.scale_in_place(1.0 / norm);
    }
    norm
}
