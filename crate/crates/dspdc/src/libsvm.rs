//! The libsvm text format: `<label> <index>:<value> ...` with 1-based,
//! strictly increasing indices. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::io::BufRead;

use dspdc_core::SparseMatrix;

use crate::error::{CliError, Result};

/// Rows of a libsvm file: a sparse matrix and one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LibsvmData {
    pub matrix: SparseMatrix,
    pub labels: Vec<f64>,
}

fn parse_error(line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_error(line, format!("non-numeric {what} `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("non-finite {what} `{tok}`")));
    }
    Ok(v)
}

/// Parses a whole stream. The column count is the largest index seen.
pub fn parse_libsvm(source: impl BufRead) -> Result<LibsvmData> {
    let mut labels = Vec::new();
    let mut indptr = vec![0usize];
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut cols = 0usize;
    for (k, line) in source.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| parse_error(lineno, e.to_string()))?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut toks = body.split_whitespace();
        let label = toks.next().expect("non-empty line has a token");
        labels.push(parse_number(label, lineno, "label")?);
        let mut last = 0usize;
        for tok in toks {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_error(lineno, format!("expected index:value, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(lineno, format!("non-numeric index `{idx}`")))?;
            if idx == 0 {
                return Err(parse_error(lineno, "indices are 1-based"));
            }
            if idx <= last {
                return Err(parse_error(
                    lineno,
                    format!("index {idx} does not increase after {last}"),
                ));
            }
            last = idx;
            let v = parse_number(val, lineno, "value")?;
            cols = cols.max(idx);
            indices.push(idx - 1);
            values.push(v);
        }
        indptr.push(indices.len());
    }
    if labels.is_empty() {
        return Err(parse_error(0, "no rows"));
    }
    let matrix = SparseMatrix::from_csr(labels.len(), cols, indptr, indices, values)?;
    Ok(LibsvmData { matrix, labels })
}

/// Writes rows in libsvm format; explicit zeros are kept.
pub fn write_libsvm(data: &LibsvmData) -> String {
    let mut out = String::new();
    for (i, label) in data.labels.iter().enumerate() {
        let (idx, vals) = data.matrix.row(i);
        write!(out, "{label}").unwrap();
        for (j, v) in idx.iter().zip(vals) {
            write!(out, " {}:{v:?}", j + 1).unwrap();
        }
        out.push('\n');
    }
    out
}
