//! Matrix-pair input files.
//!
//! Two formats are accepted. JSON:
//!
//! ```text
//! {"A": [[1, 0], [0, -1]], "B": [[3, -2], [4, -3]], "label": "optional"}
//! ```
//!
//! or plain text, one matrix per line as four row-major numbers; blank lines
//! and lines starting with `#` are ignored:
//!
//! ```text
//! 1 0 0 -1
//! 3 -2 4 -3
//! ```
//!
//! Full 2x2 matrices are projected onto their trace-free part; a trace larger
//! than `1e-12` times the Frobenius norm is rejected.

use std::path::Path;

use serde::Deserialize;
use swlyap::sl2::{Mat2, Sl2Matrix};

use crate::error::{CliError, CliResult};

pub const TRACE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPairInput {
    pub a: Sl2Matrix,
    pub b: Sl2Matrix,
    pub source: String,
    pub label: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    #[serde(rename = "A")]
    a: [[f64; 2]; 2],
    #[serde(rename = "B")]
    b: [[f64; 2]; 2],
    #[serde(default)]
    label: Option<String>,
}

pub fn read_pair(path: &Path) -> CliResult<MatrixPairInput> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_pair(&text, &path.display().to_string())
}

pub fn parse_pair(text: &str, source: &str) -> CliResult<MatrixPairInput> {
    let (a, b, label) = if text.trim_start().starts_with('{') {
        parse_json(text, source)?
    } else {
        let (a, b) = parse_plain(text, source)?;
        (a, b, None)
    };
    Ok(MatrixPairInput {
        a: project("A", &a)?,
        b: project("B", &b)?,
        source: source.to_string(),
        label,
    })
}

fn parse_json(text: &str, source: &str) -> CliResult<(Mat2, Mat2, Option<String>)> {
    let raw: RawPair = serde_json::from_str(text).map_err(|e| CliError::Parse {
        source_name: source.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok((Mat2::from_rows(raw.a), Mat2::from_rows(raw.b), raw.label))
}

fn parse_plain(text: &str, source: &str) -> CliResult<(Mat2, Mat2)> {
    let err = |line: usize, column: usize, message: String| CliError::Parse {
        source_name: source.to_string(),
        line,
        column,
        message,
    };
    let mut mats = Vec::with_capacity(2);
    let mut last_line = 0;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if mats.len() == 2 {
            return Err(err(
                lineno,
                1,
                "unexpected content after two matrices".into(),
            ));
        }
        let mut vals = Vec::with_capacity(4);
        let mut search = 0;
        for tok in line.split_whitespace() {
            let offset = line[search..]
                .find(tok)
                .map(|p| p + search)
                .unwrap_or(search);
            search = offset + tok.len();
            let column = line[..offset].chars().count() + 1;
            let v: f64 = tok
                .parse()
                .map_err(|_| err(lineno, column, format!("expected a number, found `{tok}`")))?;
            if !v.is_finite() {
                return Err(err(lineno, column, format!("non-finite entry `{tok}`")));
            }
            if vals.len() == 4 {
                return Err(err(
                    lineno,
                    column,
                    "more than four entries on a matrix line".into(),
                ));
            }
            vals.push(v);
        }
        if vals.len() < 4 {
            let column = line.chars().count() + 1;
            return Err(err(
                lineno,
                column,
                format!("expected four entries, found {}", vals.len()),
            ));
        }
        mats.push(Mat2::new(vals[0], vals[1], vals[2], vals[3]));
    }
    if mats.len() < 2 {
        return Err(err(
            last_line + 1,
            1,
            format!("expected two matrix lines, found {}", mats.len()),
        ));
    }
    Ok((mats[0], mats[1]))
}

fn project(name: &'static str, m: &Mat2) -> CliResult<Sl2Matrix> {
    if !m.is_finite() {
        return Err(CliError::Argument(format!(
            "matrix {name} has non-finite entries"
        )));
    }
    let tol = TRACE_TOL * m.frobenius();
    let trace = m.trace();
    if trace.abs() > tol {
        return Err(CliError::Trace { name, trace, tol });
    }
    Ok(m.traceless_part())
}
