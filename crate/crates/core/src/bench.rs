//! Wall-clock benchmark harness. Every timed result passes a correctness
//! gate before its timing is kept.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cwy::{apply, build_factors, materialize};
use crate::error::{Error, Result};
use crate::householder::{apply_stack, HouseholderStack};
use crate::io::fmt_f64;
use crate::linalg::{cayley, matrix_exp, Matrix, SkewParam};

/// Orthogonality gate for timed parametrizations: `|Q^T Q - I|_F` per unit
/// of dimension.
pub const ORTHOGONALITY_GATE: f64 = 1e-10;

/// Equivalence gate for timed applies: max-abs difference per reflection.
pub const EQUIVALENCE_GATE: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub l_fracs: Vec<f64>,
    pub batch: usize,
    pub trials: usize,
    pub warmup: usize,
    pub seed: u64,
    /// Worker threads for the batched CWY path; `None` uses every core.
    pub threads: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![64, 128, 256],
            l_fracs: vec![1.0],
            batch: 64,
            trials: 10,
            warmup: 2,
            seed: 0,
            threads: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.trials < 3 {
            return bad(format!("trials must be at least 3, got {}", self.trials));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return bad("sizes must be a nonempty list of positive integers".into());
        }
        if self.sizes.windows(2).any(|w| w[0] > w[1]) {
            return bad(format!(
                "sizes must be sorted ascending, got {:?}",
                self.sizes
            ));
        }
        if self.l_fracs.is_empty() || self.l_fracs.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return bad(format!(
                "l-frac values must lie in (0, 1], got {:?}",
                self.l_fracs
            ));
        }
        if self.batch == 0 {
            return bad("batch must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            builder = builder.num_threads(t);
        }
        builder
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingStats {
    pub mean_ns: f64,
    pub stderr_ns: f64,
    pub median_ns: f64,
    pub samples_ns: Vec<f64>,
}

impl TimingStats {
    pub fn from_samples(samples_ns: Vec<f64>) -> Self {
        let n = samples_ns.len() as f64;
        let mean_ns = samples_ns.iter().sum::<f64>() / n;
        let var = if samples_ns.len() > 1 {
            samples_ns
                .iter()
                .map(|x| (x - mean_ns).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = samples_ns.clone();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median_ns = if sorted.len().is_multiple_of(2) {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        Self {
            mean_ns,
            stderr_ns: (var / n).sqrt(),
            median_ns,
            samples_ns,
        }
    }
}

fn time_ns<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_nanos() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamRow {
    pub method: &'static str,
    pub n: usize,
    pub stats: TimingStats,
}

/// Time to produce an `N x N` orthogonal matrix via CWY with `L = N`
/// (factor build plus materialization), the matrix exponential and the
/// Cayley map. Reflection vectors and `X` in `A = X - X^T` are standard
/// normal, drawn from `seed` and `N` only.
pub fn bench_param(cfg: &BenchConfig) -> Result<Vec<ParamRow>> {
    cfg.validate()?;
    let pool = cfg.pool()?;
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (n as u64).rotate_left(32));
        let stack = HouseholderStack::random(n, n, &mut rng)?;
        let skew = SkewParam::random(n, &mut rng);
        type Runner<'a> = Box<dyn Fn() -> Result<Matrix> + Sync + 'a>;
        let methods: [(&'static str, Runner<'_>); 3] = [
            ("cwy", Box::new(|| Ok(materialize(&build_factors(&stack)?)))),
            ("exp", Box::new(|| matrix_exp(&skew))),
            ("cayley", Box::new(|| cayley(&skew))),
        ];
        for (method, run) in &methods {
            let samples = pool.install(|| -> Result<Vec<f64>> {
                for _ in 0..cfg.warmup {
                    run()?;
                }
                let mut samples = Vec::with_capacity(cfg.trials);
                for trial in 0..cfg.trials {
                    let (q, ns) = time_ns(run);
                    let residual = q?.orthogonality_residual();
                    if !(residual < ORTHOGONALITY_GATE * n as f64) {
                        return Err(Error::CheckFailed(format!(
                            "{method} at N = {n}, trial {trial}: |Q^T Q - I|_F = {residual:e}"
                        )));
                    }
                    samples.push(ns);
                }
                Ok(samples)
            })?;
            rows.push(ParamRow {
                method,
                n,
                stats: TimingStats::from_samples(samples),
            });
        }
    }
    Ok(rows)
}

pub const PARAM_HEADER: &str = "method,n,mean_ns,stderr_ns,median_ns";

pub fn param_csv(rows: &[ParamRow]) -> String {
    let mut out = format!("{PARAM_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.method,
            r.n,
            fmt_f64(r.stats.mean_ns),
            fmt_f64(r.stats.stderr_ns),
            fmt_f64(r.stats.median_ns)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApplyRow {
    pub n: usize,
    pub l: usize,
    pub batch: usize,
    pub threads: usize,
    pub cwy: TimingStats,
    pub hr: TimingStats,
    /// Largest per-trial max-abs difference between the two results.
    pub max_abs_diff: f64,
}

impl ApplyRow {
    /// HR median over CWY median; above 1 means CWY is faster.
    pub fn ratio(&self) -> f64 {
        self.hr.median_ns / self.cwy.median_ns
    }
}

/// Batched CWY apply (factors prebuilt) against sequential reflections on
/// identical stacks and inputs. The CWY path runs on `cfg.threads` workers,
/// the sequential path on the calling thread.
pub fn bench_apply(cfg: &BenchConfig) -> Result<Vec<ApplyRow>> {
    cfg.validate()?;
    let pool = cfg.pool()?;
    let threads = pool.current_num_threads();
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        for &frac in &cfg.l_fracs {
            let l = ((frac * n as f64).round() as usize).clamp(1, n);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((n as u64) << 32) ^ (l as u64));
            let stack = HouseholderStack::random(n, l, &mut rng)?;
            let x = Matrix::random_normal(n, cfg.batch, &mut rng);
            let factors = build_factors(&stack)?;
            let cwy_run = || pool.install(|| apply(&factors, &x));
            let hr_run = || apply_stack(&stack, &x);
            for _ in 0..cfg.warmup {
                cwy_run()?;
                hr_run()?;
            }
            let mut cwy_ns = Vec::with_capacity(cfg.trials);
            let mut hr_ns = Vec::with_capacity(cfg.trials);
            let mut max_abs_diff: f64 = 0.0;
            for trial in 0..cfg.trials {
                let (a, t_cwy) = time_ns(cwy_run);
                let (b, t_hr) = time_ns(hr_run);
                let diff = a?.max_abs_diff(&b?);
                if !(diff < EQUIVALENCE_GATE * l as f64) {
                    return Err(Error::CheckFailed(format!(
                        "apply mismatch at N = {n}, L = {l}, trial {trial}: {diff:e}"
                    )));
                }
                max_abs_diff = max_abs_diff.max(diff);
                cwy_ns.push(t_cwy);
                hr_ns.push(t_hr);
            }
            rows.push(ApplyRow {
                n,
                l,
                batch: cfg.batch,
                threads,
                cwy: TimingStats::from_samples(cwy_ns),
                hr: TimingStats::from_samples(hr_ns),
                max_abs_diff,
            });
        }
    }
    Ok(rows)
}

pub const APPLY_HEADER: &str = "n,l,batch,threads,cwy_mean_ns,cwy_stderr_ns,cwy_median_ns,\
hr_mean_ns,hr_stderr_ns,hr_median_ns,ratio,max_abs_diff";

pub fn apply_csv(rows: &[ApplyRow]) -> String {
    let mut out = format!("{APPLY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.l,
            r.batch,
            r.threads,
            fmt_f64(r.cwy.mean_ns),
            fmt_f64(r.cwy.stderr_ns),
            fmt_f64(r.cwy.median_ns),
            fmt_f64(r.hr.mean_ns),
            fmt_f64(r.hr.stderr_ns),
            fmt_f64(r.hr.median_ns),
            fmt_f64(r.ratio()),
            fmt_f64(r.max_abs_diff)
        );
    }
    out
}
