//! Plain-text matrix and vector files.
//!
//! A matrix file starts with a `rows cols` line followed by `rows` lines of
//! whitespace-separated decimals. A vectors file holds one vector per line.
//! Floats are written with 17 significant digits and LF line endings.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::householder::HouseholderStack;
use crate::linalg::Matrix;

/// Round-trippable float formatting used by every writer.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_floats(line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|e| parse_err(line_no, format!("`{tok}`: {e}")))
        })
        .collect()
}

/// Lines with content, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn read_matrix(text: &str) -> Result<Matrix> {
    let mut lines = content_lines(text);
    let (line_no, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| parse_err(line_no, format!("`{t}`: {e}")))
        })
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(parse_err(line_no, "header must be `rows cols`"));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| parse_err(line_no + r + 1, format!("expected {rows} rows, got {r}")))?;
        let values = parse_floats(line_no, line)?;
        if values.len() != cols {
            return Err(parse_err(
                line_no,
                format!("expected {cols} values, got {}", values.len()),
            ));
        }
        data.extend(values);
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(parse_err(line_no, "unexpected trailing data"));
    }
    Matrix::from_finite(rows, cols, data)
}

pub fn write_matrix(m: &Matrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn write_vectors(stack: &HouseholderStack) -> String {
    let mut out = String::new();
    for v in stack.vectors() {
        let row: Vec<String> = v.iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_vectors(text: &str) -> Result<HouseholderStack> {
    let mut vectors = Vec::new();
    for (line_no, line) in content_lines(text) {
        let v = parse_floats(line_no, line)?;
        if let Some(first) = vectors.first().map(|f: &Vec<f64>| f.len()) {
            if v.len() != first {
                return Err(parse_err(
                    line_no,
                    format!("expected {first} values, got {}", v.len()),
                ));
            }
        }
        vectors.push(v);
    }
    let n = vectors.first().map_or(0, Vec::len);
    HouseholderStack::new(n, vectors)
}
