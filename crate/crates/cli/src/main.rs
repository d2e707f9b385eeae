//! `cwy`: benchmarks, optimization demos, decompositions and FLOP tables.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration, 3 when a
//! numerical check fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cwy_core::bench::{apply_csv, bench_apply, bench_param, param_csv, BenchConfig};
use cwy_core::cwy::{build_factors, materialize};
use cwy_core::flops::grid_csv;
use cwy_core::householder::{apply_stack, decompose, HouseholderStack};
use cwy_core::io::{read_matrix, write_vectors};
use cwy_core::linalg::Matrix;
use cwy_core::optim::{
    procrustes_objective, run, stiefel_sgd, trace_objective, ParamKind, SgdReport, SgdState,
    StepSchedule,
};
use cwy_core::tcwy::{decompose_stiefel, gamma, StiefelPoint};
use cwy_core::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Round-trip tolerance per unit of dimension for `decompose`.
const ROUND_TRIP_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "cwy",
    version,
    about = "Compact WY orthogonal parametrizations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time CWY, matrix exponential and Cayley materialization of N x N matrices.
    BenchParam(BenchArgs),
    /// Time batched CWY apply against sequential Householder reflections.
    BenchApply(BenchArgs),
    /// Run SGD over Householder vectors on a Procrustes problem.
    Demo(DemoArgs),
    /// Split an orthogonal or Stiefel matrix file into Householder vectors.
    Decompose(DecomposeArgs),
    /// Emit the closed-form FLOP table as CSV.
    Flops(FlopsArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Matrix sizes N, ascending.
    #[arg(long, value_delimiter = ',', default_values_t = [64, 128, 256])]
    sizes: Vec<usize>,
    /// Reflection counts as fractions of N (bench-apply only).
    #[arg(long = "l-frac", value_delimiter = ',', default_values_t = [1.0])]
    l_frac: Vec<f64>,
    /// Columns in the applied block (bench-apply only).
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the parallel path; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl BenchArgs {
    fn config(&self) -> BenchConfig {
        BenchConfig {
            sizes: self.sizes.clone(),
            l_fracs: self.l_frac.clone(),
            batch: self.batch,
            trials: self.trials,
            warmup: self.warmup,
            seed: self.seed,
            threads: self.threads,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    /// Planted `|Q A - B|_F^2` over the orthogonal group.
    ProcrustesOn,
    /// `-Tr(M^T Omega)` over the Stiefel manifold.
    ProcrustesSt,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, value_enum)]
    task: Task,
    /// Ambient dimension N.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Columns M of the Stiefel point (procrustes-st only).
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 20_000)]
    iters: u64,
    /// Stop once the running minimum squared gradient norm drops below this.
    #[arg(long = "grad-tol", default_value_t = 1e-8)]
    grad_tol: f64,
    /// Standard deviation of additive gradient noise.
    #[arg(long = "noise-sigma", default_value_t = 0.0)]
    noise_sigma: f64,
    /// Base step size; the plain k^{-1/2} schedule when omitted.
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Orthogonal,
    Stiefel,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Matrix file: a `rows cols` line, then one row per line.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Orthogonal)]
    mode: Mode,
    /// Output path for the vectors, one per line; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FlopsArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [32, 64, 128, 256, 512, 1024])]
    ns: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16, 32, 64])]
    ms: Vec<u64>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn schedule(eta0: Option<f64>) -> Result<StepSchedule> {
    match eta0 {
        None => Ok(StepSchedule::InverseSqrt),
        Some(e) if e > 0.0 && e.is_finite() => Ok(StepSchedule::ScaledInverseSqrt(e)),
        Some(e) => Err(Error::InvalidConfig(format!(
            "eta0 must be positive, got {e}"
        ))),
    }
}

fn cmd_bench_param(args: &BenchArgs) -> Result<()> {
    let rows = bench_param(&args.config())?;
    emit(args.out.as_deref(), &param_csv(&rows))
}

fn cmd_bench_apply(args: &BenchArgs) -> Result<()> {
    let rows = bench_apply(&args.config())?;
    for r in &rows {
        eprintln!(
            "n={} l={} batch={} threads={}: HR/CWY median ratio {:.3}",
            r.n,
            r.l,
            r.batch,
            r.threads,
            r.ratio()
        );
    }
    emit(args.out.as_deref(), &apply_csv(&rows))
}

fn summarize(report: &SgdReport) {
    eprintln!(
        "steps={} converged={} final_objective={:e} min_sq_grad_norm={:e}",
        report.records.len(),
        report.converged,
        report.final_objective,
        report.records.last().map_or(f64::NAN, |r| r.min_so_far)
    );
}

fn cmd_demo(args: &DemoArgs) -> Result<()> {
    let schedule = schedule(args.eta0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let n = args.n;
    let report = match args.task {
        Task::ProcrustesOn => {
            if n == 0 {
                return Err(Error::InvalidConfig("n must be positive".into()));
            }
            let planted = HouseholderStack::random(n, n, &mut rng)?;
            let q_star = materialize(&build_factors(&planted)?);
            let noise = Matrix::random_normal(n, n, &mut rng).scale(0.3 / (n as f64).sqrt());
            let a = Matrix::identity(n).add(&noise);
            let b = q_star.matmul(&a);
            let mut objective = procrustes_objective(a, b, args.noise_sigma, args.seed)?;
            let stack = HouseholderStack::random(n, n, &mut rng)?;
            let mut state = SgdState::new(stack, ParamKind::Orthogonal, schedule)?;
            let report = run(&mut state, &mut objective, args.iters, args.grad_tol)?;
            summarize(&report);
            report
        }
        Task::ProcrustesSt => {
            let m = args.m;
            if m == 0 || m >= n {
                return Err(Error::RequiresStrictTruncation { n, m });
            }
            let target = Matrix::random_normal(n, m, &mut rng);
            let mut objective = trace_objective(target, args.noise_sigma, args.seed)?;
            let stack = HouseholderStack::random(n, m, &mut rng)?;
            let (_, report) =
                stiefel_sgd(stack, schedule, &mut objective, args.iters, args.grad_tol)?;
            summarize(&report);
            report
        }
    };
    emit(args.out.as_deref(), &report.to_csv())
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| Error::Io(format!("{}: {e}", args.input.display())))?;
    let matrix = read_matrix(&text)?;
    let stack = match args.mode {
        Mode::Orthogonal => {
            let n = matrix.rows();
            let stack = decompose(&matrix)?;
            let back = apply_stack(&stack, &Matrix::identity(n))?;
            let err = back.sub(&matrix).frobenius_norm();
            if !(err < ROUND_TRIP_TOL * n as f64) {
                return Err(Error::CheckFailed(format!("round-trip error {err:e}")));
            }
            stack
        }
        Mode::Stiefel => {
            let omega = StiefelPoint::new(matrix)?;
            let stack = decompose_stiefel(&omega)?;
            let err = gamma(&stack)?.omega().sub(omega.omega()).frobenius_norm();
            if !(err < ROUND_TRIP_TOL * omega.m() as f64) {
                return Err(Error::CheckFailed(format!("round-trip error {err:e}")));
            }
            stack
        }
    };
    emit(args.out.as_deref(), &write_vectors(&stack))
}

fn cmd_flops(args: &FlopsArgs) -> Result<()> {
    emit(args.out.as_deref(), &grid_csv(&args.ns, &args.ms)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::BenchParam(a) => cmd_bench_param(a),
        Command::BenchApply(a) => cmd_bench_apply(a),
        Command::Demo(a) => cmd_demo(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Flops(a) => cmd_flops(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
