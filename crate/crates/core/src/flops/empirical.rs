use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cwy::{apply_counted, build_factors_counted, materialize_counted};
use crate::error::Result;
use crate::householder::{apply_stack_counted, HouseholderStack};
use crate::linalg::{product, triangular_solve_counted, Matrix, UpperTriangular};
use crate::tcwy::gamma_counted;

use super::counter::FlopCounter;
use super::model::{estimate, Dims, Method};

/// Instrumentable kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `d1 x d2` times `d2 x d3`.
    Gemm { d1: usize, d2: usize, d3: usize },
    /// `m x m` upper-triangular solve with `rhs` right-hand sides.
    TriangularSolve { m: usize, rhs: usize },
    /// Truncated CWY forward pass, stack build included.
    TCwyGamma { n: usize, m: usize },
    /// Factor build plus dense `N x N` materialization.
    CwyMaterialize { n: usize, l: usize },
    /// Factor build plus batched apply to `t` columns.
    CwyApply { n: usize, l: usize, t: usize },
    /// Sequential reflections applied to `t` columns.
    HrApply { n: usize, l: usize, t: usize },
}

impl Kernel {
    /// Model count the kernel is compared against. Materialization is
    /// the apply model with `T = N`.
    pub fn model(self) -> Result<Ratio<i128>> {
        let u = |x: usize| x as u64;
        let exact = |x: usize| Ratio::from_integer(x as i128);
        Ok(match self {
            Kernel::Gemm { d1, d2, d3 } => exact(2 * d1 * d2 * d3),
            Kernel::TriangularSolve { m, rhs } => exact(m * m * rhs),
            Kernel::TCwyGamma { n, m } => {
                estimate(Method::TCwy, Dims::Stiefel { n: u(n), m: u(m) })?.flops
            }
            Kernel::CwyMaterialize { n, l } => {
                estimate(
                    Method::CwyApply,
                    Dims::Apply {
                        n: u(n),
                        l: u(l),
                        t: u(n),
                    },
                )?
                .flops
            }
            Kernel::CwyApply { n, l, t } => {
                estimate(
                    Method::CwyApply,
                    Dims::Apply {
                        n: u(n),
                        l: u(l),
                        t: u(t),
                    },
                )?
                .flops
            }
            Kernel::HrApply { n, l, t } => {
                estimate(
                    Method::HrApply,
                    Dims::Apply {
                        n: u(n),
                        l: u(l),
                        t: u(t),
                    },
                )?
                .flops
            }
        })
    }
}

/// Runs `kernel` once on seeded random inputs and returns the number of
/// scalar multiplies and adds it executed.
pub fn count_empirical(kernel: Kernel, seed: u64) -> Result<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counter = FlopCounter::new();
    match kernel {
        Kernel::Gemm { d1, d2, d3 } => {
            let a = Matrix::random_normal(d1, d2, &mut rng);
            let b = Matrix::random_normal(d2, d3, &mut rng);
            product(a.view(), b.view(), &counter);
        }
        Kernel::TriangularSolve { m, rhs } => {
            let mut s = Matrix::random_normal(m, m, &mut rng).scale(0.1 / (m.max(1) as f64).sqrt());
            for i in 0..m {
                s[(i, i)] = 1.0;
            }
            let s = UpperTriangular::from_upper_part(&s);
            let b = Matrix::random_normal(m, rhs, &mut rng);
            triangular_solve_counted(&s, &b, &counter)?;
        }
        Kernel::TCwyGamma { n, m } => {
            let stack = HouseholderStack::random(n, m, &mut rng)?;
            gamma_counted(&stack, &counter)?;
        }
        Kernel::CwyMaterialize { n, l } => {
            let stack = HouseholderStack::random(n, l, &mut rng)?;
            let f = build_factors_counted(&stack, &counter)?;
            materialize_counted(&f, &counter);
        }
        Kernel::CwyApply { n, l, t } => {
            let stack = HouseholderStack::random(n, l, &mut rng)?;
            let x = Matrix::random_normal(n, t, &mut rng);
            let f = build_factors_counted(&stack, &counter)?;
            apply_counted(&f, &x, &counter)?;
        }
        Kernel::HrApply { n, l, t } => {
            let stack = HouseholderStack::random(n, l, &mut rng)?;
            let x = Matrix::random_normal(n, t, &mut rng);
            apply_stack_counted(&stack, &x, &counter)?;
        }
    }
    Ok(counter.get())
}
