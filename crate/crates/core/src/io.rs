//! File formats: poset text files, tensors as JSON or CSV, factorization
//! exports and halfspace listings.
//!
//! Poset files look like
//!
//! ```text
//! # comment
//! elements: a,b,c
//! a < c
//! b < c
//! ```
//!
//! Relation lines may be chained (`a < b < c`) and need not be reduced.
//! Tensors are JSON objects `{"shape": [...], "data": [...]}` in row-major
//! order, or headerless CSV matrices with one line per row.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cone::{format_normal, ConeHRep};
use crate::error::{NdError, Result};
use crate::factor::{FitReport, NDFactorization};
use crate::fixtures;
use crate::poset::Poset;
use crate::tensor::Tensor;

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> NdError {
    NdError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Parses the poset text format.
pub fn parse_poset(text: &str) -> Result<Poset> {
    let mut labels: Option<Vec<String>> = None;
    let mut edges: Vec<(String, String)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let lead = content.len() - content.trim_start().len();
        match &labels {
            None => {
                let body = content.trim_start();
                let Some(rest) = body.strip_prefix("elements:") else {
                    return Err(parse_err(line_no, lead + 1, "expected `elements: a,b,...`"));
                };
                let mut seen = HashSet::new();
                let mut list = Vec::new();
                let mut offset = lead + "elements:".len();
                for part in rest.split(',') {
                    let name = part.trim();
                    let col = offset + part.len() - part.trim_start().len() + 1;
                    if name.is_empty() {
                        return Err(parse_err(line_no, col, "empty element name"));
                    }
                    if name.contains('<') {
                        return Err(parse_err(line_no, col, "element names may not contain `<`"));
                    }
                    if !seen.insert(name.to_string()) {
                        return Err(parse_err(line_no, col, format!("duplicate element `{name}`")));
                    }
                    list.push(name.to_string());
                    offset += part.len() + 1;
                }
                labels = Some(list);
            }
            Some(known) => {
                let mut names = Vec::new();
                let mut offset = 0;
                for part in content.split('<') {
                    let name = part.trim();
                    let col = offset + part.len() - part.trim_start().len() + 1;
                    if name.is_empty() {
                        return Err(parse_err(line_no, col, "expected an element name"));
                    }
                    if !known.iter().any(|l| l == name) {
                        return Err(parse_err(line_no, col, format!("undeclared element `{name}`")));
                    }
                    names.push(name.to_string());
                    offset += part.len() + 1;
                }
                if names.len() < 2 {
                    return Err(parse_err(line_no, lead + 1, "expected a relation `a < b`"));
                }
                for w in names.windows(2) {
                    edges.push((w[0].clone(), w[1].clone()));
                }
            }
        }
    }
    let labels = labels.ok_or_else(|| parse_err(1, 1, "missing `elements:` line"))?;
    let refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    Poset::from_relation(&label_refs, &refs)
}

/// Writes a poset in the text format, listing its covers.
pub fn format_poset(poset: &Poset) -> String {
    let mut out = format!("elements: {}\n", poset.labels().join(","));
    for &(a, b) in poset.covers() {
        out.push_str(&format!("{} < {}\n", poset.labels()[a], poset.labels()[b]));
    }
    out
}

/// Resolves a poset argument: `chain:N`, `trivial:N`, `star:N`,
/// `fixture:NAME`, or a path to a poset file.
pub fn load_poset(spec: &str) -> Result<Poset> {
    let size = |n: &str| -> Result<usize> {
        n.parse::<usize>()
            .ok()
            .filter(|&p| p > 0)
            .ok_or_else(|| NdError::InvalidArgument(format!("invalid poset size in `{spec}`")))
    };
    if let Some(n) = spec.strip_prefix("chain:") {
        return Ok(Poset::chain(size(n)?));
    }
    if let Some(n) = spec.strip_prefix("trivial:") {
        return Ok(Poset::trivial(size(n)?));
    }
    if let Some(n) = spec.strip_prefix("star:") {
        let p = size(n)?;
        if p < 2 {
            return Err(NdError::InvalidArgument("star orders need at least 2 elements".into()));
        }
        return Ok(Poset::star(p));
    }
    if let Some(name) = spec.strip_prefix("fixture:") {
        return fixtures::poset_fixture(name);
    }
    parse_poset(&fs::read_to_string(spec)?)
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Parses the tensor JSON format.
pub fn parse_tensor_json(text: &str) -> Result<Tensor> {
    let raw: TensorJson = serde_json::from_str(text)
        .map_err(|e| parse_err(e.line(), e.column(), e.to_string()))?;
    Tensor::new(raw.shape, raw.data)
}

pub fn tensor_to_json(t: &Tensor) -> String {
    serde_json::to_string(&TensorJson {
        shape: t.shape().to_vec(),
        data: t.data().to_vec(),
    })
    .expect("tensor serializes")
}

/// Parses a headerless CSV matrix (one line per row).
pub fn parse_csv_matrix(text: &str) -> Result<Tensor> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        let mut offset = 0;
        for cell in line.split(',') {
            let col = offset + cell.len() - cell.trim_start().len() + 1;
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_err(ln + 1, col, format!("`{}` is not a number", cell.trim())))?;
            if !v.is_finite() {
                return Err(parse_err(ln + 1, col, "value is not finite"));
            }
            row.push(v);
            offset += cell.len() + 1;
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    ln + 1,
                    1,
                    format!("row has {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, 1, "empty matrix"));
    }
    Tensor::from_rows(&rows)
}

/// Writes a matrix as headerless CSV.
pub fn matrix_to_csv(t: &Tensor) -> Result<String> {
    if t.order() != 2 {
        return Err(NdError::ShapeMismatch("CSV output needs a matrix".into()));
    }
    let n = t.shape()[1];
    Ok(t
        .data()
        .chunks(n)
        .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n")
}

/// Resolves a tensor argument: `fixture:NAME`, a `.json` file, or anything
/// else read as CSV.
pub fn load_tensor(spec: &str) -> Result<Tensor> {
    if let Some(name) = spec.strip_prefix("fixture:") {
        return fixtures::tensor_fixture(name);
    }
    let text = fs::read_to_string(spec)?;
    if Path::new(spec).extension().is_some_and(|e| e == "json") {
        parse_tensor_json(&text)
    } else {
        parse_csv_matrix(&text)
    }
}

/// Serialized form of a fitted factorization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationExport {
    pub rank: usize,
    pub shape: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// `factors[i][j]`: mode-`j` vector of term `i` (unit ℓ2 norm).
    pub factors: Vec<Vec<Vec<f64>>>,
    pub posets: Vec<String>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub objective_trace: Vec<f64>,
    pub rss: f64,
    pub residual: f64,
    pub sweeps: usize,
    pub best_restart: usize,
    pub converged: bool,
    pub restart_rss: Vec<f64>,
}

impl FactorizationExport {
    pub fn new(f: &NDFactorization, posets: &[String], report: Option<&FitReport>, rss: f64) -> Self {
        let diagnostics = match report {
            Some(r) => Diagnostics {
                objective_trace: r.best_trace().to_vec(),
                rss: r.rss,
                residual: r.residual,
                sweeps: r.sweeps,
                best_restart: r.best_restart,
                converged: r.converged,
                restart_rss: r.restart_rss.clone(),
            },
            None => Diagnostics {
                objective_trace: vec![rss],
                rss,
                residual: rss.sqrt(),
                sweeps: 0,
                best_restart: 0,
                converged: true,
                restart_rss: vec![rss],
            },
        };
        FactorizationExport {
            rank: f.rank(),
            shape: f.shape().to_vec(),
            lambdas: f.lambdas().to_vec(),
            factors: f.factors().to_vec(),
            posets: posets.to_vec(),
            diagnostics,
        }
    }

    pub fn factorization(&self) -> Result<NDFactorization> {
        NDFactorization::new(self.shape.clone(), self.lambdas.clone(), self.factors.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("export serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.column(), e.to_string()))
    }
}

/// Mode-`j` factor table: one row per element, one column per term.
pub fn factor_table_csv(terms: &[Vec<Vec<f64>>], mode: usize, labels: &[String]) -> String {
    let mut out = String::from("element");
    for i in 0..terms.len() {
        out.push_str(&format!(",term{}", i + 1));
    }
    out.push('\n');
    for (l, label) in labels.iter().enumerate() {
        out.push_str(label);
        for term in terms {
            out.push_str(&format!(",{}", term[mode][l]));
        }
        out.push('\n');
    }
    out
}

/// Objective trace as `sweep,rss` CSV.
pub fn trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("sweep,rss\n");
    for (i, v) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

/// One line of integer coefficients per normal (`>= 0` implied).
pub fn hrep_to_text(h: &ConeHRep) -> String {
    h.normals
        .iter()
        .map(|n| n.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ") + "\n")
        .collect()
}

/// Inverse of [`hrep_to_text`] for a known shape.
pub fn parse_hrep(text: &str, shape: &[usize]) -> Result<ConeHRep> {
    let dim: usize = shape.iter().product();
    let mut normals = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let n = line
            .split_whitespace()
            .map(|c| c.parse::<i64>().map_err(|_| parse_err(ln + 1, 1, format!("bad coefficient `{c}`"))))
            .collect::<Result<Vec<i64>>>()?;
        if n.len() != dim {
            return Err(parse_err(ln + 1, 1, format!("expected {dim} coefficients")));
        }
        normals.push(n);
    }
    Ok(ConeHRep {
        shape: shape.to_vec(),
        normals,
    })
}

/// Human-readable halfspace listing.
pub fn hrep_to_pretty(h: &ConeHRep) -> String {
    h.normals
        .iter()
        .map(|n| format_normal(n, &h.shape) + "\n")
        .collect()
}
