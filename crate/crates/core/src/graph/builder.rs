use std::collections::HashMap;

use super::validate::infer_shape;
use super::{Graph, GraphError, Matrix, Node, NodeId, NodeKind, TensorShape};

/// Incremental graph construction with eager shape inference.
///
/// Nodes can only reference nodes that already exist, so anything built
/// here is acyclic by construction.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    nodes: Vec<Node>,
    shapes: Vec<TensorShape>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add_node(&mut self, kind: NodeKind, preds: Vec<NodeId>) -> Result<NodeId, GraphError> {
        let id = NodeId(self.nodes.len());
        if let Some(expected) = kind.arity() {
            if preds.len() != expected {
                return Err(GraphError::Construction(format!(
                    "{} node needs {expected} predecessors, got {}",
                    kind.name(),
                    preds.len()
                )));
            }
        } else if preds.is_empty() {
            return Err(GraphError::Construction(format!("{} node needs predecessors", kind.name())));
        }
        let mut pred_shapes = Vec::with_capacity(preds.len());
        for p in &preds {
            pred_shapes.push(self.shapes.get(p.index()).ok_or(GraphError::UnknownNode(*p))?);
        }
        let shape = infer_shape(&kind, &pred_shapes).map_err(|detail| GraphError::Shape {
            node: format!("new {} node {}", kind.name(), id.0),
            detail,
        })?;
        self.nodes.push(Node { kind, preds });
        self.shapes.push(shape);
        Ok(id)
    }

    pub fn shape(&self, id: NodeId) -> Result<&TensorShape, GraphError> {
        self.shapes.get(id.index()).ok_or(GraphError::UnknownNode(id))
    }

    pub fn dim(&self, id: NodeId) -> Result<usize, GraphError> {
        Ok(self.shape(id)?.numel())
    }

    /// Replaces the bias of an existing affine node.
    pub(crate) fn set_bias(&mut self, id: NodeId, new_bias: Vec<f64>) -> Result<(), GraphError> {
        match self.nodes.get_mut(id.index()).map(|n| &mut n.kind) {
            Some(NodeKind::Affine { bias, .. }) if bias.len() == new_bias.len() => {
                *bias = new_bias;
                Ok(())
            }
            Some(_) => Err(GraphError::Construction(format!("{id} is not an affine node of matching width"))),
            None => Err(GraphError::UnknownNode(id)),
        }
    }

    pub fn input(&mut self, dim: usize) -> Result<NodeId, GraphError> {
        self.input_shaped(TensorShape::vector(dim)?)
    }

    pub fn input_shaped(&mut self, shape: TensorShape) -> Result<NodeId, GraphError> {
        if self.nodes.iter().any(|n| matches!(n.kind, NodeKind::Input(_))) {
            return Err(GraphError::Construction("graph already has an input".into()));
        }
        self.add_node(NodeKind::Input(shape), vec![])
    }

    pub fn parameter(&mut self, values: Vec<f64>) -> Result<NodeId, GraphError> {
        let shape = TensorShape::vector(values.len())?;
        self.add_node(NodeKind::Parameter(shape, values), vec![])
    }

    pub fn affine(&mut self, x: NodeId, weight: Matrix, bias: Vec<f64>) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::Affine { weight, bias }, vec![x])
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::Relu, vec![x])
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::Add, vec![a, b])
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::Subtract, vec![a, b])
    }

    pub fn neg(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::Negate, vec![x])
    }

    pub fn scale(&mut self, x: NodeId, s: f64) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::ScaleConst(s), vec![x])
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId, GraphError> {
        if parts.len() == 1 {
            return Ok(parts[0]);
        }
        self.add_node(NodeKind::Concat(0), parts.to_vec())
    }

    pub fn slice(&mut self, x: NodeId, start: usize, end: usize) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::Slice { start, end }, vec![x])
    }

    pub fn select(&mut self, x: NodeId, indices: Vec<usize>) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::SelectIndices(indices), vec![x])
    }

    pub fn clamp(&mut self, x: NodeId, lo: Vec<f64>, hi: Vec<f64>) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::ClampConst { lo, hi }, vec![x])
    }

    pub fn reduce_max(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::ReduceMax, vec![x])
    }

    pub fn max_node(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::MaxPairwise, vec![a, b])
    }

    pub fn min_node(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.add_node(NodeKind::MinPairwise, vec![a, b])
    }

    /// Copies `graph` into this builder, feeding `input` where `graph`
    /// reads its `Input` node. Returns the mapping from `graph`'s node ids to
    /// the new ids; the copy's sink is `mapping[graph.sink().index()]`.
    pub fn inline(&mut self, graph: &Graph, input: NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.inline_sharing(graph, input, &HashMap::new())
    }

    /// [`GraphBuilder::inline`] that reuses already-present nodes for the
    /// entries of `shared` (keyed by `graph`'s node ids) instead of copying.
    pub fn inline_sharing(
        &mut self,
        graph: &Graph,
        input: NodeId,
        shared: &HashMap<NodeId, NodeId>,
    ) -> Result<Vec<NodeId>, GraphError> {
        let order = graph.topological_order()?.to_vec();
        let graph_input = graph.input()?;
        let expected = graph.shape(graph_input)?.clone();
        let found = self.shape(input)?.clone();
        if expected.numel() != found.numel() {
            return Err(GraphError::Shape {
                node: format!("inlined input {}", input.0),
                detail: format!("graph expects {expected}, got {found}"),
            });
        }
        let mut mapping = vec![NodeId(usize::MAX); graph.len()];
        for id in order {
            let node = &graph.nodes()[id.index()];
            let new_id = if id == graph_input {
                if expected == found {
                    input
                } else {
                    // Same element count, different layout: flatten through a slice.
                    self.slice(input, 0, found.numel())?
                }
            } else if let Some(&existing) = shared.get(&id) {
                existing
            } else {
                let preds = node.preds.iter().map(|p| mapping[p.index()]).collect();
                self.add_node(node.kind.clone(), preds)?
            };
            mapping[id.index()] = new_id;
        }
        Ok(mapping)
    }

    /// Consumes the builder. Fails if the result is not a well-formed graph.
    pub fn finish(self, sink: NodeId) -> Result<Graph, GraphError> {
        Graph::new(self.nodes, sink)
    }
}
