//! The native JSON graph format.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "input": 0,
//!   "sink": 2,
//!   "nodes": [
//!     {"id": 0, "kind": "input", "preds": [], "shape": [2]},
//!     {"id": 1, "kind": "affine", "preds": [0], "weight": [[1.0, -1.0]], "bias": [0.5]},
//!     {"id": 2, "kind": "relu", "preds": [1]}
//!   ]
//! }
//! ```
//!
//! Nodes are written in id order. Floats use the shortest representation
//! that parses back to the same bits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, Matrix, Node, NodeId, NodeKind, TensorShape};

use super::IoError;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Input,
    Parameter,
    Affine,
    Relu,
    Max,
    Min,
    Add,
    Subtract,
    Negate,
    Scale,
    Concat,
    Slice,
    Select,
    Clamp,
    ReduceMax,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: usize,
    kind: Kind,
    preds: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi: Option<Vec<f64>>,
}

impl NodeDoc {
    fn bare(id: usize, kind: Kind, preds: Vec<usize>) -> Self {
        NodeDoc {
            id,
            kind,
            preds,
            shape: None,
            values: None,
            weight: None,
            bias: None,
            factor: None,
            axis: None,
            start: None,
            end: None,
            indices: None,
            lo: None,
            hi: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    format_version: u64,
    input: usize,
    sink: usize,
    nodes: Vec<NodeDoc>,
}

/// Serializes `graph` to the native JSON text.
pub fn graph_to_json(graph: &Graph) -> Result<String, IoError> {
    let input = graph.input()?;
    let mut nodes = Vec::with_capacity(graph.len());
    for id in graph.ids() {
        let node = &graph.nodes()[id.index()];
        let preds = node.preds.iter().map(|p| p.index()).collect();
        let floats = |field: &str, xs: &[f64]| -> Result<Vec<f64>, IoError> {
            match xs.iter().find(|x| !x.is_finite()) {
                Some(x) => Err(IoError::Unrepresentable(format!("{id} has non-finite {field} value {x}"))),
                None => Ok(xs.to_vec()),
            }
        };
        let doc = match &node.kind {
            NodeKind::Input(shape) => NodeDoc { shape: Some(shape.dims().to_vec()), ..NodeDoc::bare(id.0, Kind::Input, preds) },
            NodeKind::Parameter(shape, values) => NodeDoc {
                shape: Some(shape.dims().to_vec()),
                values: Some(floats("parameter", values)?),
                ..NodeDoc::bare(id.0, Kind::Parameter, preds)
            },
            NodeKind::Affine { weight, bias } => NodeDoc {
                weight: Some((0..weight.rows()).map(|i| floats("weight", weight.row(i))).collect::<Result<_, _>>()?),
                bias: Some(floats("bias", bias)?),
                ..NodeDoc::bare(id.0, Kind::Affine, preds)
            },
            NodeKind::Relu => NodeDoc::bare(id.0, Kind::Relu, preds),
            NodeKind::MaxPairwise => NodeDoc::bare(id.0, Kind::Max, preds),
            NodeKind::MinPairwise => NodeDoc::bare(id.0, Kind::Min, preds),
            NodeKind::Add => NodeDoc::bare(id.0, Kind::Add, preds),
            NodeKind::Subtract => NodeDoc::bare(id.0, Kind::Subtract, preds),
            NodeKind::Negate => NodeDoc::bare(id.0, Kind::Negate, preds),
            NodeKind::ScaleConst(s) => {
                NodeDoc { factor: Some(floats("factor", &[*s])?[0]), ..NodeDoc::bare(id.0, Kind::Scale, preds) }
            }
            NodeKind::Concat(axis) => NodeDoc { axis: Some(*axis), ..NodeDoc::bare(id.0, Kind::Concat, preds) },
            NodeKind::Slice { start, end } => {
                NodeDoc { start: Some(*start), end: Some(*end), ..NodeDoc::bare(id.0, Kind::Slice, preds) }
            }
            NodeKind::SelectIndices(indices) => {
                NodeDoc { indices: Some(indices.clone()), ..NodeDoc::bare(id.0, Kind::Select, preds) }
            }
            NodeKind::ClampConst { lo, hi } => NodeDoc {
                lo: Some(floats("lo", lo)?),
                hi: Some(floats("hi", hi)?),
                ..NodeDoc::bare(id.0, Kind::Clamp, preds)
            },
            NodeKind::ReduceMax => NodeDoc::bare(id.0, Kind::ReduceMax, preds),
        };
        nodes.push(doc);
    }
    let doc = GraphDoc { format_version: FORMAT_VERSION, input: input.0, sink: graph.sink().0, nodes };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| IoError::Unrepresentable(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Parses the native JSON text. The version is checked before anything
/// else; schema errors carry the JSON pointer of the offending value.
pub fn graph_from_json(text: &str) -> Result<Graph, IoError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| IoError::Schema {
        pointer: String::new(),
        message: e.to_string(),
    })?;
    match value.get("format_version") {
        Some(v) if v.as_u64() == Some(FORMAT_VERSION) => {}
        Some(v) => return Err(IoError::Version { found: v.to_string() }),
        None => {
            return Err(IoError::Schema { pointer: "/format_version".into(), message: "missing field".into() })
        }
    }
    let doc: GraphDoc = serde_path_to_error::deserialize(&value).map_err(|e| IoError::Schema {
        pointer: pointer(e.path()),
        message: e.inner().to_string(),
    })?;
    build(doc)
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for segment in path.iter() {
        out.push('/');
        match segment {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn build(doc: GraphDoc) -> Result<Graph, IoError> {
    let n = doc.nodes.len();
    let schema = |pointer: String, message: String| IoError::Schema { pointer, message };
    let mut slots: Vec<Option<Node>> = vec![None; n];
    for (pos, node) in doc.nodes.into_iter().enumerate() {
        let at = |field: &str| format!("/nodes/{pos}/{field}");
        if node.id >= n {
            return Err(schema(at("id"), format!("id {} out of range for {n} nodes", node.id)));
        }
        if slots[node.id].is_some() {
            return Err(schema(at("id"), format!("duplicate id {}", node.id)));
        }
        if let Some(k) = node.preds.iter().position(|&p| p >= n) {
            return Err(schema(format!("/nodes/{pos}/preds/{k}"), format!("unknown node {}", node.preds[k])));
        }
        let require = |field: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(schema(at(field), format!("required for {:?} nodes", node.kind).to_lowercase()))
            }
        };
        let shape = |dims: &Option<Vec<usize>>| -> Result<TensorShape, IoError> {
            require("shape", dims.is_some())?;
            TensorShape::new(dims.clone().unwrap_or_default()).map_err(|e| schema(at("shape"), e.to_string()))
        };
        let kind = match node.kind {
            Kind::Input => NodeKind::Input(shape(&node.shape)?),
            Kind::Parameter => {
                require("values", node.values.is_some())?;
                NodeKind::Parameter(shape(&node.shape)?, node.values.clone().unwrap_or_default())
            }
            Kind::Affine => {
                require("weight", node.weight.is_some())?;
                require("bias", node.bias.is_some())?;
                let rows = node.weight.as_deref().unwrap_or_default();
                let weight = if rows.is_empty() {
                    Matrix::zeros(0, 0)
                } else {
                    Matrix::from_rows(rows).map_err(|e| schema(at("weight"), e.to_string()))?
                };
                NodeKind::Affine { weight, bias: node.bias.clone().unwrap_or_default() }
            }
            Kind::Relu => NodeKind::Relu,
            Kind::Max => NodeKind::MaxPairwise,
            Kind::Min => NodeKind::MinPairwise,
            Kind::Add => NodeKind::Add,
            Kind::Subtract => NodeKind::Subtract,
            Kind::Negate => NodeKind::Negate,
            Kind::Scale => {
                require("factor", node.factor.is_some())?;
                NodeKind::ScaleConst(node.factor.unwrap_or_default())
            }
            Kind::Concat => {
                require("axis", node.axis.is_some())?;
                NodeKind::Concat(node.axis.unwrap_or_default())
            }
            Kind::Slice => {
                require("start", node.start.is_some())?;
                require("end", node.end.is_some())?;
                NodeKind::Slice { start: node.start.unwrap_or_default(), end: node.end.unwrap_or_default() }
            }
            Kind::Select => {
                require("indices", node.indices.is_some())?;
                NodeKind::SelectIndices(node.indices.clone().unwrap_or_default())
            }
            Kind::Clamp => {
                require("lo", node.lo.is_some())?;
                require("hi", node.hi.is_some())?;
                NodeKind::ClampConst { lo: node.lo.clone().unwrap_or_default(), hi: node.hi.clone().unwrap_or_default() }
            }
            Kind::ReduceMax => NodeKind::ReduceMax,
        };
        slots[node.id] = Some(Node { kind, preds: node.preds.iter().map(|&p| NodeId(p)).collect() });
    }
    // ids are unique and below n, so every slot is filled
    let nodes: Vec<Node> = slots.into_iter().map(|s| s.expect("every id present")).collect();
    if doc.sink >= n {
        return Err(schema("/sink".into(), format!("unknown node {}", doc.sink)));
    }
    let graph = Graph::new(nodes, NodeId(doc.sink))?;
    if graph.input()? != NodeId(doc.input) {
        return Err(schema("/input".into(), format!("node {} is not the input node", doc.input)));
    }
    Ok(graph)
}

pub fn save_graph(graph: &Graph, path: &Path) -> Result<(), IoError> {
    let text = graph_to_json(graph)?;
    std::fs::write(path, text).map_err(|e| IoError::file(path, e))
}

pub fn load_graph(path: &Path) -> Result<Graph, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    graph_from_json(&text)
}
