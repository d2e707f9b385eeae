use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cwy_core::householder::HouseholderStack;
use cwy_core::io::{read_vectors, write_matrix};
use cwy_core::linalg::Matrix;
use cwy_core::tcwy::gamma;
use tempfile::TempDir;

fn cwy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwy"))
        .args(args)
        .output()
        .expect("failed to launch cwy")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn reconstruct(vectors: &str) -> Matrix {
    let stack = read_vectors(vectors).unwrap();
    let n = stack.n();
    let mut q = Matrix::identity(n);
    for v in stack.vectors().iter().rev() {
        let single = HouseholderStack::new(n, vec![v.clone()]).unwrap();
        q = cwy_core::householder::apply_stack(&single, &q).unwrap();
    }
    q
}

#[test]
fn help_succeeds() {
    let out = cwy(&["--help"]);
    assert_eq!(code(&out), 0);
    for sub in ["bench-param", "bench-apply", "demo", "decompose", "flops"] {
        assert!(stdout(&out).contains(sub));
    }
}

#[test]
fn unknown_flags_are_validation_errors() {
    assert_eq!(code(&cwy(&["flops", "--bogus"])), 2);
    assert_eq!(code(&cwy(&["demo", "--task", "nope"])), 2);
    assert_eq!(code(&cwy(&[])), 2);
}

#[test]
fn flops_table() {
    let out = cwy(&["flops", "--ns", "64", "--ms", "16"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("method,n,m,flops_exact,flops_rounded\n"));
    assert!(text.contains("T-CWY,64,16,225280/3,75093\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn flops_to_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("grid.csv");
    let out = cwy(&["flops", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).is_empty());
    let text = fs::read_to_string(&path).unwrap();
    // 6 x 5 pairs less (32, 64), 6 methods each
    assert_eq!(text.lines().count(), 1 + 29 * 6);
}

#[test]
fn decompose_orthogonal_file() {
    let dir = TempDir::new().unwrap();
    let q = Matrix::from_rows(&[&[0.6, -0.8], &[0.8, 0.6]]);
    let input = write(&dir, "q.txt", &write_matrix(&q));
    let out_path = dir.path().join("v.txt");
    let out = cwy(&["decompose", &input, "--out", out_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let vectors = fs::read_to_string(&out_path).unwrap();
    assert_eq!(vectors.lines().count(), 2);
    assert!(reconstruct(&vectors).sub(&q).frobenius_norm() < 1e-12);
}

#[test]
fn decompose_minus_one() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "q.txt", "1 1\n-1\n");
    let out = cwy(&["decompose", &input]);
    assert_eq!(code(&out), 0);
    let stack = read_vectors(&stdout(&out)).unwrap();
    assert_eq!(stack.vectors(), &[vec![-1.0]]);
}

#[test]
fn decompose_stiefel_file() {
    let dir = TempDir::new().unwrap();
    let w = Matrix::from_rows(&[&[0.0, 1.0], &[0.6, 0.0], &[0.8, 0.0]]);
    let input = write(&dir, "w.txt", &write_matrix(&w));
    let out = cwy(&["decompose", &input, "--mode", "stiefel"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stack = read_vectors(&stdout(&out)).unwrap();
    assert_eq!(stack.l(), 2);
    assert!(gamma(&stack).unwrap().omega().sub(&w).frobenius_norm() < 1e-12);
}

#[test]
fn decompose_rejections_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("swap.txt", "2 2\n0 1\n1 0\n", "orthogonal"),
        ("skewed.txt", "2 2\n1 0.1\n0 1\n", "orthogonal"),
        ("ragged.txt", "2 2\n1 0\n0\n", "orthogonal"),
        ("nan.txt", "1 1\nNaN\n", "orthogonal"),
        ("tall.txt", "3 1\n1\n1\n0\n", "stiefel"),
        ("square.txt", "2 2\n1 0\n0 1\n", "stiefel"),
    ];
    for (name, text, mode) in cases {
        let input = write(&dir, name, text);
        let out = cwy(&["decompose", &input, "--mode", mode]);
        assert_eq!(
            code(&out),
            2,
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(stdout(&out).is_empty());
    }
    let missing = dir.path().join("absent.txt");
    assert_eq!(code(&cwy(&["decompose", missing.to_str().unwrap()])), 2);
}

#[test]
fn demo_orthogonal_writes_report() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("report.csv");
    let out = cwy(&[
        "demo",
        "--task",
        "procrustes-on",
        "--seed",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("k,objective,sum_sq_grad_norm,min_so_far,min_vector_norm")
    );
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!(last[3] < 1e-8);
    assert!(String::from_utf8_lossy(&out.stderr).contains("converged=true"));
}

#[test]
fn demo_is_deterministic() {
    let args = [
        "demo",
        "--task",
        "procrustes-st",
        "--n",
        "6",
        "--m",
        "2",
        "--iters",
        "50",
        "--noise-sigma",
        "0.1",
        "--seed",
        "9",
    ];
    let a = cwy(&args);
    let b = cwy(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().count(), 51);
}

#[test]
fn demo_validation() {
    assert_eq!(
        code(&cwy(&[
            "demo",
            "--task",
            "procrustes-st",
            "--n",
            "3",
            "--m",
            "3"
        ])),
        2
    );
    assert_eq!(
        code(&cwy(&[
            "demo",
            "--task",
            "procrustes-on",
            "--noise-sigma",
            "-1"
        ])),
        2
    );
    assert_eq!(
        code(&cwy(&["demo", "--task", "procrustes-on", "--eta0", "0"])),
        2
    );
}

#[test]
fn bench_apply_small() {
    let out = cwy(&[
        "bench-apply",
        "--sizes",
        "8,16",
        "--l-frac",
        "0.5,1",
        "--batch",
        "4",
        "--trials",
        "3",
        "--warmup",
        "0",
        "--threads",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("n,l,batch,threads,cwy_mean_ns"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("8,4,4,1,"));
    assert!(rows[3].starts_with("16,16,4,1,"));
}

#[test]
fn bench_param_small() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("param.csv");
    let out = cwy(&[
        "bench-param",
        "--sizes",
        "4,8",
        "--trials",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(Path::new(&path)).unwrap();
    assert!(text.starts_with("method,n,mean_ns,stderr_ns,median_ns\n"));
    for method in ["cwy", "exp", "cayley"] {
        assert_eq!(
            text.lines()
                .filter(|l| l.starts_with(&format!("{method},")))
                .count(),
            2
        );
    }
}

#[test]
fn bench_validation() {
    assert_eq!(code(&cwy(&["bench-apply", "--trials", "2"])), 2);
    assert_eq!(code(&cwy(&["bench-param", "--sizes", "16,8"])), 2);
    assert_eq!(code(&cwy(&["bench-apply", "--l-frac", "1.5"])), 2);
    assert_eq!(code(&cwy(&["bench-apply", "--threads", "0"])), 2);
}
