//! Computational-graph intermediate representation.
//!
//! A [`Graph`] is a DAG of typed operation nodes with exactly one `Input`
//! source, any number of constant `Parameter` sources and a single sink.
//! Every value flowing along an edge is a dense row-major [`Value`].
//!
//! Graphs are immutable once built. Construction goes through
//! [`GraphBuilder`], which infers shapes eagerly; graphs loaded from outside
//! (JSON, exchange files) can be arbitrary and are checked by [`validate`].

mod builder;
mod eval;
pub mod gadgets;
mod lower;
mod stitch;
mod types;
mod validate;

pub use builder::GraphBuilder;
pub use eval::{evaluate, evaluate_all, evaluate_flat, EvalError};
pub(crate) use eval::concat as eval_concat;
pub use lower::{lower_to_relu, Lowered};
pub use stitch::stitch;
pub use types::{Hyperrectangle, Matrix, NodeId, NodeKind, TensorShape, Value};
pub use validate::{validate, ValidationReport, Violation};

use std::sync::OnceLock;

use thiserror::Error;

/// Errors raised while constructing or transforming graphs.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    Invalid(ValidationReport),
    #[error("shape mismatch at {node}: {detail}")]
    Shape { node: String, detail: String },
    #[error("invalid construction: {0}")]
    Construction(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// A node: its operation and the ordered list of predecessors it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub preds: Vec<NodeId>,
}

/// Derived facts about a well-formed graph, computed once on first use.
#[derive(Debug, Clone)]
pub(crate) struct Plan {
    pub order: Vec<NodeId>,
    pub shapes: Vec<TensorShape>,
    pub input: NodeId,
    pub successors: Vec<Vec<NodeId>>,
}

#[derive(Debug)]
pub struct Graph {
    nodes: Vec<Node>,
    sink: NodeId,
    plan: OnceLock<Result<Plan, ValidationReport>>,
}

impl Clone for Graph {
    fn clone(&self) -> Self {
        Graph {
            nodes: self.nodes.clone(),
            sink: self.sink,
            plan: self.plan.clone(),
        }
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.sink == other.sink && self.nodes == other.nodes
    }
}

impl Graph {
    /// Wraps raw nodes without checking them. Use [`validate`] or any
    /// evaluation entry point to find out whether the graph is well-formed.
    pub fn from_parts(nodes: Vec<Node>, sink: NodeId) -> Graph {
        Graph {
            nodes,
            sink,
            plan: OnceLock::new(),
        }
    }

    /// Like [`Graph::from_parts`] but rejects malformed graphs.
    pub fn new(nodes: Vec<Node>, sink: NodeId) -> Result<Graph, GraphError> {
        let graph = Graph::from_parts(nodes, sink);
        graph.plan()?;
        Ok(graph)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.index())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub(crate) fn plan(&self) -> Result<&Plan, GraphError> {
        self.plan
            .get_or_init(|| validate::plan(self))
            .as_ref()
            .map_err(|report| GraphError::Invalid(report.clone()))
    }

    /// The unique `Input` node.
    pub fn input(&self) -> Result<NodeId, GraphError> {
        Ok(self.plan()?.input)
    }

    /// Nodes in a topological order (predecessors first).
    pub fn topological_order(&self) -> Result<&[NodeId], GraphError> {
        Ok(&self.plan()?.order)
    }

    pub fn shape(&self, id: NodeId) -> Result<&TensorShape, GraphError> {
        self.plan()?
            .shapes
            .get(id.index())
            .ok_or(GraphError::UnknownNode(id))
    }

    pub fn input_shape(&self) -> Result<&TensorShape, GraphError> {
        let plan = self.plan()?;
        Ok(&plan.shapes[plan.input.index()])
    }

    pub fn output_shape(&self) -> Result<&TensorShape, GraphError> {
        self.shape(self.sink)
    }

    pub fn input_dim(&self) -> Result<usize, GraphError> {
        Ok(self.input_shape()?.numel())
    }

    pub fn output_dim(&self) -> Result<usize, GraphError> {
        Ok(self.output_shape()?.numel())
    }

    pub fn successors(&self, id: NodeId) -> Result<&[NodeId], GraphError> {
        Ok(&self.plan()?.successors[id.index()])
    }

    /// Number of piecewise-linear scalar units (ReLU coordinates, pairwise
    /// max/min coordinates, clamp sides and reduce-max comparisons).
    pub fn piecewise_units(&self) -> Result<usize, GraphError> {
        let plan = self.plan()?;
        let mut count = 0;
        for id in self.ids() {
            let node = &self.nodes[id.index()];
            let own = plan.shapes[id.index()].numel();
            count += match &node.kind {
                NodeKind::Relu | NodeKind::MaxPairwise | NodeKind::MinPairwise => own,
                NodeKind::ClampConst { .. } => 2 * own,
                NodeKind::ReduceMax => plan.shapes[node.preds[0].index()].numel() - 1,
                _ => 0,
            };
        }
        Ok(count)
    }

    /// Histogram of node kinds, keyed by the kind's short name.
    pub fn kind_counts(&self) -> std::collections::BTreeMap<&'static str, usize> {
        let mut counts = std::collections::BTreeMap::new();
        for node in &self.nodes {
            *counts.entry(node.kind.name()).or_insert(0) += 1;
        }
        counts
    }
}
