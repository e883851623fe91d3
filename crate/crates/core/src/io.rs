//! Text formats: CSV data/matrices, 1-based coordinate triplets for sparse
//! symmetric matrices, and vertex-ordering files.
//!
//! Floating point values are written with Rust's shortest round-trip
//! formatting so identical inputs produce byte-identical outputs.

use nalgebra::DMatrix;

use crate::cov::DataMatrix;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::order::VertexOrdering;

/// Parse a CSV of observations (rows) by variables (columns). A header row
/// is auto-detected: if any token in the first row fails to parse as a
/// number, the row is taken as variable names.
pub fn read_csv_data(text: &str) -> Result<DataMatrix> {
    let mut lines = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        lines.push((lineno + 1, trimmed));
    }
    if lines.is_empty() {
        return Err(Error::input("CSV file is empty"));
    }
    let split = |s: &str| -> Vec<String> { s.split(',').map(|t| t.trim().to_string()).collect() };
    let first = split(lines[0].1);
    let header = first.iter().any(|tok| tok.parse::<f64>().is_err());
    let names = header.then(|| first.clone());
    let p = first.len();
    let data_lines = if header { &lines[1..] } else { &lines[..] };
    if data_lines.is_empty() {
        return Err(Error::input("CSV file has a header but no data rows"));
    }
    let mut values = Vec::with_capacity(data_lines.len() * p);
    for &(ln, line) in data_lines {
        let tokens = split(line);
        if tokens.len() != p {
            return Err(Error::input(format!(
                "line {ln}: expected {p} fields, found {}",
                tokens.len()
            )));
        }
        for tok in tokens {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::input(format!("line {ln}: bad number '{tok}'")))?;
            values.push(v);
        }
    }
    let n = values.len() / p;
    DataMatrix::new(DMatrix::from_row_slice(n, p, &values), names)
}

/// Parse a square matrix from either dense CSV or `%`-headed 1-based
/// coordinate triplets (`i j value`, symmetric completion, dimension from
/// the largest index).
pub fn read_matrix(text: &str) -> Result<DMatrix<f64>> {
    let first_meaningful = text.lines().map(str::trim).find(|l| !l.is_empty());
    match first_meaningful {
        Some(line) if line.starts_with('%') => read_triplets(text),
        Some(_) => {
            // header names are allowed on matrices but carry no meaning
            let data = read_csv_data(text)?;
            if data.n() != data.p() {
                return Err(Error::input(format!(
                    "matrix is {}x{}, expected square",
                    data.n(),
                    data.p()
                )));
            }
            Ok(data.values().clone())
        }
        None => Err(Error::input("matrix file is empty")),
    }
}

/// Parse a symmetric matrix, validating symmetry.
pub fn read_sym_matrix(text: &str) -> Result<SymMatrix> {
    SymMatrix::from_dense(read_matrix(text)?)
}

fn read_triplets(text: &str) -> Result<DMatrix<f64>> {
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut max_index = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let ln = lineno + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::input(format!(
                "line {ln}: expected 'i j value', found {} tokens",
                toks.len()
            )));
        }
        let i: usize = toks[0]
            .parse()
            .map_err(|_| Error::input(format!("line {ln}: bad row index '{}'", toks[0])))?;
        let j: usize = toks[1]
            .parse()
            .map_err(|_| Error::input(format!("line {ln}: bad column index '{}'", toks[1])))?;
        let v: f64 = toks[2]
            .parse()
            .map_err(|_| Error::input(format!("line {ln}: bad value '{}'", toks[2])))?;
        if i == 0 || j == 0 {
            return Err(Error::input(format!("line {ln}: indices are 1-based")));
        }
        max_index = max_index.max(i).max(j);
        entries.push((i - 1, j - 1, v));
    }
    if entries.is_empty() {
        return Err(Error::input("triplet file has no entries"));
    }
    let mut m = DMatrix::zeros(max_index, max_index);
    for (i, j, v) in entries {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Ok(m)
}

/// Dense CSV, one row per line.
pub fn format_csv_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Lower-triangular non-zeros (diagonal included) of a symmetric matrix as
/// 1-based `i j value` triplets with a `%` comment header.
pub fn format_triplets(s: &SymMatrix, comment: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("% {comment}\n"));
    out.push_str(&format!("% p {}\n", s.p()));
    for i in 0..s.p() {
        for j in 0..=i {
            let v = s.get(i, j);
            if v != 0.0 {
                out.push_str(&format!("{} {} {}\n", i + 1, j + 1, v));
            }
        }
    }
    out
}

/// Ordering file: one 1-based original label per line, in position order
/// (the vertex on line k is placed at position k).
pub fn format_ordering(sigma: &VertexOrdering) -> String {
    let mut out = String::new();
    for pos in 0..sigma.p() {
        out.push_str(&format!("{}\n", sigma.vertex_at(pos) + 1));
    }
    out
}

/// Parse an ordering file for a graph on `p` vertices.
pub fn read_ordering(text: &str, p: usize) -> Result<VertexOrdering> {
    let mut sequence = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let ln = lineno + 1;
        let label: usize = line
            .parse()
            .map_err(|_| Error::input(format!("line {ln}: bad vertex label '{line}'")))?;
        if label == 0 || label > p {
            return Err(Error::input(format!(
                "line {ln}: vertex {label} out of range 1..{p}"
            )));
        }
        sequence.push(label - 1);
    }
    if sequence.len() != p {
        return Err(Error::input(format!(
            "ordering lists {} vertices but the graph has {p}",
            sequence.len()
        )));
    }
    VertexOrdering::from_sequence(sequence)
}
