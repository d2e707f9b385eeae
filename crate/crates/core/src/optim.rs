//! Stochastic gradient descent over raw Householder vectors with step size
//! `eta_0 k^{-1/2}`, plus small Procrustes-type objectives to drive it.
//!
//! Every vector is updated from the same materialized matrix, and each
//! gradient is orthogonal to its vector, so vector norms never decrease.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cwy::{self, build_factors};
use crate::error::{Error, Result};
use crate::householder::HouseholderStack;
use crate::linalg::Matrix;
use crate::tcwy;

/// Objective over `N x N` orthogonal or `N x M` Stiefel matrices with an
/// unbiased stochastic gradient.
pub trait StochasticObjective {
    /// Expected shape of the argument.
    fn shape(&self) -> (usize, usize);
    fn value(&self, q: &Matrix) -> f64;
    /// Exact Euclidean gradient `df/dQ`.
    fn gradient(&self, q: &Matrix) -> Matrix;
    /// One draw of the stochastic gradient; advances the noise stream.
    fn sample_gradient(&mut self, q: &Matrix) -> Matrix;
}

fn add_noise(g: &mut Matrix, sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma != 0.0 {
        g.add_scaled(sigma, &Matrix::random_normal(g.rows(), g.cols(), rng));
    }
}

/// `f(Q) = |Q A - B|_F^2`, gradient `2 (Q A - B) A^T`, plus optional iid
/// `N(0, sigma^2)` gradient noise.
#[derive(Debug, Clone)]
pub struct ProcrustesObjective {
    a: Matrix,
    b: Matrix,
    noise_sigma: f64,
    rng: ChaCha8Rng,
}

pub fn procrustes_objective(
    a: Matrix,
    b: Matrix,
    noise_sigma: f64,
    seed: u64,
) -> Result<ProcrustesObjective> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "A is {:?} but B is {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise sigma must be nonnegative, got {noise_sigma}"
        )));
    }
    Ok(ProcrustesObjective {
        a,
        b,
        noise_sigma,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

impl StochasticObjective for ProcrustesObjective {
    fn shape(&self) -> (usize, usize) {
        (self.a.rows(), self.a.rows())
    }

    fn value(&self, q: &Matrix) -> f64 {
        q.matmul(&self.a).sub(&self.b).frobenius_norm_sq()
    }

    fn gradient(&self, q: &Matrix) -> Matrix {
        q.matmul(&self.a).sub(&self.b).matmul_t(&self.a).scale(2.0)
    }

    fn sample_gradient(&mut self, q: &Matrix) -> Matrix {
        let mut g = self.gradient(q);
        add_noise(&mut g, self.noise_sigma, &mut self.rng);
        g
    }
}

/// `f(Omega) = -Tr(M^T Omega)`, minimized over `St(N, M)` at
/// `-sum_i sigma_i(M)`.
#[derive(Debug, Clone)]
pub struct TraceObjective {
    target: Matrix,
    noise_sigma: f64,
    rng: ChaCha8Rng,
}

pub fn trace_objective(target: Matrix, noise_sigma: f64, seed: u64) -> Result<TraceObjective> {
    if target.rows() < target.cols() {
        return Err(Error::ShapeMismatch(format!(
            "trace target must be tall, got {:?}",
            target.shape()
        )));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise sigma must be nonnegative, got {noise_sigma}"
        )));
    }
    Ok(TraceObjective {
        target,
        noise_sigma,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

impl StochasticObjective for TraceObjective {
    fn shape(&self) -> (usize, usize) {
        self.target.shape()
    }

    fn value(&self, q: &Matrix) -> f64 {
        -self.target.dot(q)
    }

    fn gradient(&self, _q: &Matrix) -> Matrix {
        self.target.scale(-1.0)
    }

    fn sample_gradient(&mut self, q: &Matrix) -> Matrix {
        let mut g = self.gradient(q);
        add_noise(&mut g, self.noise_sigma, &mut self.rng);
        g
    }
}

/// Step size at iteration `k`: `eta_0 / sqrt(k)`. `eta_0 = 1` is the plain
/// `k^{-1/2}` schedule; any other base rate is a tuning departure from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    InverseSqrt,
    ScaledInverseSqrt(f64),
}

impl StepSchedule {
    pub fn step(self, k: u64) -> f64 {
        let base = match self {
            StepSchedule::InverseSqrt => 1.0,
            StepSchedule::ScaledInverseSqrt(eta0) => eta0,
        };
        base / (k as f64).sqrt()
    }
}

/// What the stack parametrizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// `H(v_1) ... H(v_L)`, an `N x N` orthogonal matrix.
    Orthogonal,
    /// Its first `L` columns, an `N x L` Stiefel point (`L < N`).
    Stiefel,
}

/// One optimizer step as recorded in the report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub k: u64,
    /// Objective at the iterate the gradient was taken at.
    pub objective: f64,
    /// `sum_l |df/dv_l|^2` of the exact gradient at that iterate.
    pub sum_sq_grad_norm: f64,
    pub min_so_far: f64,
    /// Smallest vector norm after the update.
    pub min_vector_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SgdState {
    stack: HouseholderStack,
    kind: ParamKind,
    schedule: StepSchedule,
    k: u64,
    min_so_far: f64,
}

impl SgdState {
    pub fn new(stack: HouseholderStack, kind: ParamKind, schedule: StepSchedule) -> Result<Self> {
        if kind == ParamKind::Stiefel && stack.l() >= stack.n() {
            return Err(Error::RequiresStrictTruncation {
                n: stack.n(),
                m: stack.l(),
            });
        }
        Ok(Self {
            stack,
            kind,
            schedule,
            k: 1,
            min_so_far: f64::INFINITY,
        })
    }

    pub fn stack(&self) -> &HouseholderStack {
        &self.stack
    }

    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    /// Index of the next step, starting at 1.
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn min_so_far(&self) -> f64 {
        self.min_so_far
    }

    /// Current orthogonal matrix or Stiefel point.
    pub fn point(&self) -> Result<Matrix> {
        match self.kind {
            ParamKind::Orthogonal => Ok(cwy::materialize(&build_factors(&self.stack)?)),
            ParamKind::Stiefel => Ok(tcwy::gamma(&self.stack)?.into_matrix()),
        }
    }

    fn vector_grads(&self, upstream: &Matrix) -> Result<Vec<Vec<f64>>> {
        match self.kind {
            ParamKind::Orthogonal => cwy::grad(&self.stack, upstream),
            ParamKind::Stiefel => tcwy::gamma_grad(&self.stack, upstream),
        }
    }
}

fn sum_sq(grads: &[Vec<f64>]) -> f64 {
    grads.iter().flatten().map(|x| x * x).sum()
}

/// Updates every vector from the same point and the same noise draw:
/// `v_l <- v_l - eta_k df~/dv_l`.
pub fn sgd_step<O: StochasticObjective + ?Sized>(
    state: &mut SgdState,
    objective: &mut O,
) -> Result<StepRecord> {
    let q = state.point()?;
    if q.shape() != objective.shape() {
        return Err(Error::ShapeMismatch(format!(
            "objective expects {:?}, parametrization gives {:?}",
            objective.shape(),
            q.shape()
        )));
    }
    let value = objective.value(&q);
    let exact = objective.gradient(&q);
    let sample = objective.sample_gradient(&q);
    let noisy = sample != exact;
    let step_grads = state.vector_grads(&sample)?;
    let sum_sq_grad_norm = if noisy {
        sum_sq(&state.vector_grads(&exact)?)
    } else {
        sum_sq(&step_grads)
    };

    let eta = state.schedule.step(state.k);
    let vectors = state
        .stack
        .vectors()
        .iter()
        .zip(&step_grads)
        .map(|(v, g)| v.iter().zip(g).map(|(x, d)| x - eta * d).collect())
        .collect();
    state.stack = HouseholderStack::new(state.stack.n(), vectors)?;
    state.min_so_far = state.min_so_far.min(sum_sq_grad_norm);
    let record = StepRecord {
        k: state.k,
        objective: value,
        sum_sq_grad_norm,
        min_so_far: state.min_so_far,
        min_vector_norm: state
            .stack
            .norms()
            .into_iter()
            .fold(f64::INFINITY, f64::min),
    };
    state.k += 1;
    Ok(record)
}

#[derive(Debug, Clone)]
pub struct SgdReport {
    pub records: Vec<StepRecord>,
    /// True when the running minimum fell below the tolerance.
    pub converged: bool,
    /// Objective at the final iterate.
    pub final_objective: f64,
}

pub const REPORT_HEADER: &str = "k,objective,sum_sq_grad_norm,min_so_far,min_vector_norm";

impl SgdReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(REPORT_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.k, r.objective, r.sum_sq_grad_norm, r.min_so_far, r.min_vector_norm
            );
        }
        out
    }

    /// Least-squares slope of `ln(min_so_far)` against `ln(k)` over
    /// `k_lo <= k <= k_hi`. `None` with fewer than two usable points.
    pub fn loglog_slope(&self, k_lo: u64, k_hi: u64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .records
            .iter()
            .filter(|r| r.k >= k_lo && r.k <= k_hi && r.min_so_far > 0.0)
            .map(|r| ((r.k as f64).ln(), r.min_so_far.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

/// Steps until the running minimum of the squared gradient norm drops below
/// `grad_tol` or `max_iters` steps have run.
pub fn run<O: StochasticObjective + ?Sized>(
    state: &mut SgdState,
    objective: &mut O,
    max_iters: u64,
    grad_tol: f64,
) -> Result<SgdReport> {
    let mut records = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        let r = sgd_step(state, objective)?;
        records.push(r);
        if r.min_so_far < grad_tol {
            converged = true;
            break;
        }
    }
    let final_objective = objective.value(&state.point()?);
    Ok(SgdReport {
        records,
        converged,
        final_objective,
    })
}

/// [`run`] over the truncated parametrization `gamma(v_1, ..., v_M)`.
pub fn stiefel_sgd<O: StochasticObjective + ?Sized>(
    stack: HouseholderStack,
    schedule: StepSchedule,
    objective: &mut O,
    max_iters: u64,
    grad_tol: f64,
) -> Result<(SgdState, SgdReport)> {
    let mut state = SgdState::new(stack, ParamKind::Stiefel, schedule)?;
    let report = run(&mut state, objective, max_iters, grad_tol)?;
    Ok((state, report))
}
