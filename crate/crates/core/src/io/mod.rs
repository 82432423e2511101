//! Reading and writing networks and composed problems.

mod native;
pub mod onnx;

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::compose::ComposedProblem;
use crate::graph::{Graph, GraphError};

pub use native::{graph_from_json, graph_to_json, load_graph, save_graph, FORMAT_VERSION};
pub use onnx::{export_model, import_model, model_from_bytes, model_to_bytes, ImportReport, ModelFile};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IoError {
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("schema violation at '{pointer}': {message}")]
    Schema { pointer: String, message: String },
    #[error("unsupported format_version {found} (expected {FORMAT_VERSION})")]
    Version { found: String },
    #[error("unsupported operators: {}", operators.join(", "))]
    Unsupported { operators: Vec<String> },
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("cannot export: {0}")]
    Unrepresentable(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl IoError {
    pub(crate) fn file(path: &Path, err: std::io::Error) -> Self {
        IoError::File { path: path.display().to_string(), message: err.to_string() }
    }
}

/// Loads a network: native JSON for `.json` files, ONNX otherwise.
pub fn load_network(path: &Path) -> Result<Graph, IoError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        load_graph(path)
    } else {
        Ok(import_model(path)?.graph)
    }
}

/// The property of a composed problem as a VNN-LIB violation query: one
/// input variable per dimension of `W` with its box bounds, and the
/// assertion that the output is negative.
pub fn property_text(problem: &ComposedProblem) -> String {
    let bx = &problem.property.input_box;
    let mut out = String::new();
    out.push_str("; violation query: the property holds iff this query is unsatisfiable\n");
    out.push_str("; (the composed network is non-negative on the whole input box)\n");
    if let Some(kind) = problem.spec_kind {
        let _ = writeln!(out, "; spec: {}", kind.name());
    }
    out.push('\n');
    for i in 0..bx.dim() {
        let _ = writeln!(out, "(declare-const X_{i} Real)");
    }
    out.push_str("(declare-const Y_0 Real)\n\n");
    for i in 0..bx.dim() {
        let _ = writeln!(out, "(assert (>= X_{i} {}))", decimal(bx.lower()[i]));
        let _ = writeln!(out, "(assert (<= X_{i} {}))", decimal(bx.upper()[i]));
    }
    out.push_str("\n(assert (< Y_0 0.0))\n");
    out
}

/// Plain decimal that parses back to the same `f64`.
fn decimal(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Writes the composed network as an ONNX model and its property as a
/// VNN-LIB file. Both are deterministic functions of the problem.
pub fn export_problem(problem: &ComposedProblem, model_path: &Path, property_path: &Path) -> Result<(), IoError> {
    let bx = &problem.property.input_box;
    if let Some(x) = bx.lower().iter().chain(bx.upper()).find(|x| !x.is_finite()) {
        return Err(IoError::Unrepresentable(format!("input box bound {x} is not finite")));
    }
    export_model(&problem.graph, model_path)?;
    std::fs::write(property_path, property_text(problem)).map_err(|e| IoError::file(property_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_round_trip() {
        for x in [0.0, -0.05, 1.0, 1e-7, 123456.75, 0.1 + 0.2, -3.0e10] {
            let s = decimal(x);
            assert!(!s.contains('e'), "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
