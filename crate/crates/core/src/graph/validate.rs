use std::collections::VecDeque;
use std::fmt;

use super::{Graph, NodeId, NodeKind, Plan, TensorShape};

/// One violated well-formedness condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyGraph,
    SinkOutOfRange(NodeId),
    UnknownPredecessor { node: NodeId, pred: NodeId },
    MissingInput,
    MultipleInputs(Vec<NodeId>),
    /// Nodes that could not be ordered because they sit on or behind a cycle.
    Cycle(Vec<NodeId>),
    Arity { node: NodeId, expected: usize, found: usize },
    ShapeMismatch { node: NodeId, detail: String },
    InvalidNode { node: NodeId, detail: String },
    /// A node without successors that is not the designated sink.
    ExtraSink(NodeId),
    /// A node with successors but no path to the sink.
    Dangling(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyGraph => write!(f, "graph has no nodes"),
            Violation::SinkOutOfRange(id) => write!(f, "sink {id} does not exist"),
            Violation::UnknownPredecessor { node, pred } => {
                write!(f, "{node} reads unknown predecessor {}", pred.0)
            }
            Violation::MissingInput => write!(f, "graph has no input node"),
            Violation::MultipleInputs(ids) => write!(f, "graph has {} input nodes", ids.len()),
            Violation::Cycle(ids) => {
                let ids: Vec<usize> = ids.iter().map(|id| id.0).collect();
                write!(f, "cycle through nodes {ids:?}")
            }
            Violation::Arity { node, expected, found } => {
                write!(f, "{node} expects {expected} predecessors, found {found}")
            }
            Violation::ShapeMismatch { node, detail } => write!(f, "shape mismatch at {node}: {detail}"),
            Violation::InvalidNode { node, detail } => write!(f, "invalid {node}: {detail}"),
            Violation::ExtraSink(id) => write!(f, "{id} has no successors but is not the sink"),
            Violation::Dangling(id) => write!(f, "{id} does not reach the sink"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Checks every structural invariant and lists all violations found.
pub fn validate(graph: &Graph) -> ValidationReport {
    match plan(graph) {
        Ok(_) => ValidationReport::default(),
        Err(report) => report,
    }
}

/// Output shape of `kind` applied to predecessors of the given shapes.
pub(crate) fn infer_shape(kind: &NodeKind, preds: &[&TensorShape]) -> Result<TensorShape, String> {
    let same = |a: &TensorShape, b: &TensorShape| {
        if a == b {
            Ok(a.clone())
        } else {
            Err(format!("operands have shapes {a} and {b}"))
        }
    };
    match kind {
        NodeKind::Input(shape) => Ok(shape.clone()),
        NodeKind::Parameter(shape, values) => {
            if values.len() != shape.numel() {
                return Err(format!(
                    "parameter of shape {shape} holds {} values",
                    values.len()
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err("parameter values must be finite".into());
            }
            Ok(shape.clone())
        }
        NodeKind::Affine { weight, bias } => {
            if bias.len() != weight.rows() {
                return Err(format!(
                    "bias has {} entries for a {}x{} weight",
                    bias.len(),
                    weight.rows(),
                    weight.cols()
                ));
            }
            if bias.iter().any(|v| !v.is_finite()) {
                return Err("bias entries must be finite".into());
            }
            let n = preds[0].numel();
            if n != weight.cols() {
                return Err(format!(
                    "weight is {}x{} but input has {n} elements",
                    weight.rows(),
                    weight.cols()
                ));
            }
            TensorShape::vector(weight.rows()).map_err(|e| e.to_string())
        }
        NodeKind::Relu | NodeKind::Negate => Ok(preds[0].clone()),
        NodeKind::ScaleConst(s) => {
            if !s.is_finite() {
                return Err("scale must be finite".into());
            }
            Ok(preds[0].clone())
        }
        NodeKind::MaxPairwise | NodeKind::MinPairwise | NodeKind::Add | NodeKind::Subtract => {
            same(preds[0], preds[1])
        }
        NodeKind::Concat(axis) => {
            let first = preds[0];
            if *axis >= first.rank() {
                return Err(format!("concat axis {axis} out of range for rank {}", first.rank()));
            }
            let mut dims = first.dims().to_vec();
            for p in &preds[1..] {
                let compatible = p.rank() == first.rank()
                    && p
                        .dims()
                        .iter()
                        .zip(first.dims())
                        .enumerate()
                        .all(|(ax, (a, b))| ax == *axis || a == b);
                if !compatible {
                    return Err(format!("cannot concatenate {p} onto {first} along axis {axis}"));
                }
                dims[*axis] += p.dims()[*axis];
            }
            TensorShape::new(dims).map_err(|e| e.to_string())
        }
        NodeKind::Slice { start, end } => {
            let n = preds[0].numel();
            if start >= end || *end > n {
                return Err(format!("slice {start}..{end} invalid for {n} elements"));
            }
            TensorShape::vector(end - start).map_err(|e| e.to_string())
        }
        NodeKind::SelectIndices(indices) => {
            let n = preds[0].numel();
            if indices.is_empty() {
                return Err("empty index selection".into());
            }
            if let Some(bad) = indices.iter().find(|&&i| i >= n) {
                return Err(format!("index {bad} out of range for {n} elements"));
            }
            TensorShape::vector(indices.len()).map_err(|e| e.to_string())
        }
        NodeKind::ClampConst { lo, hi } => {
            let n = preds[0].numel();
            if lo.len() != n || hi.len() != n {
                return Err(format!("clamp bounds sized {}/{} for {n} elements", lo.len(), hi.len()));
            }
            if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
                return Err("clamp bounds must be finite with lo <= hi".into());
            }
            Ok(preds[0].clone())
        }
        NodeKind::ReduceMax => TensorShape::vector(1).map_err(|e| e.to_string()),
    }
}

pub(crate) fn plan(graph: &Graph) -> Result<Plan, ValidationReport> {
    let nodes = graph.nodes();
    let n = nodes.len();
    let mut violations = Vec::new();
    if n == 0 {
        return Err(ValidationReport {
            violations: vec![Violation::EmptyGraph],
        });
    }
    let sink = graph.sink();
    if sink.index() >= n {
        violations.push(Violation::SinkOutOfRange(sink));
    }

    let mut edges_ok = true;
    for (i, node) in nodes.iter().enumerate() {
        for &p in &node.preds {
            if p.index() >= n {
                edges_ok = false;
                violations.push(Violation::UnknownPredecessor { node: NodeId(i), pred: p });
            }
        }
        if let Some(expected) = node.kind.arity() {
            if node.preds.len() != expected {
                violations.push(Violation::Arity {
                    node: NodeId(i),
                    expected,
                    found: node.preds.len(),
                });
            }
        } else if node.preds.is_empty() {
            violations.push(Violation::Arity {
                node: NodeId(i),
                expected: 1,
                found: 0,
            });
        }
    }

    let inputs: Vec<NodeId> = (0..n)
        .filter(|&i| matches!(nodes[i].kind, NodeKind::Input(_)))
        .map(NodeId)
        .collect();
    match inputs.len() {
        0 => violations.push(Violation::MissingInput),
        1 => {}
        _ => violations.push(Violation::MultipleInputs(inputs.clone())),
    }
    if !edges_ok {
        return Err(ValidationReport { violations });
    }

    let mut successors = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for (i, node) in nodes.iter().enumerate() {
        for &p in &node.preds {
            successors[p.index()].push(NodeId(i));
            indegree[i] += 1;
        }
    }

    // Kahn's algorithm; ties broken by id so the order is reproducible.
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    let mut remaining = indegree.clone();
    while let Some(i) = queue.pop_front() {
        order.push(NodeId(i));
        for s in &successors[i] {
            remaining[s.index()] -= 1;
            if remaining[s.index()] == 0 {
                queue.push_back(s.index());
            }
        }
    }
    if order.len() < n {
        let stuck: Vec<NodeId> = (0..n).filter(|&i| remaining[i] > 0).map(NodeId).collect();
        violations.push(Violation::Cycle(stuck));
    }

    let mut shapes: Vec<Option<TensorShape>> = vec![None; n];
    for &id in &order {
        let node = &nodes[id.index()];
        if node.kind.arity().is_some_and(|a| a != node.preds.len()) {
            continue;
        }
        let pred_shapes: Option<Vec<&TensorShape>> =
            node.preds.iter().map(|p| shapes[p.index()].as_ref()).collect();
        let Some(pred_shapes) = pred_shapes else {
            continue;
        };
        if node.preds.is_empty() && node.kind.arity().is_none() {
            continue;
        }
        match infer_shape(&node.kind, &pred_shapes) {
            Ok(shape) => shapes[id.index()] = Some(shape),
            Err(detail) => {
                let v = if matches!(
                    node.kind,
                    NodeKind::Parameter(..)
                        | NodeKind::ClampConst { .. }
                        | NodeKind::ScaleConst(_)
                        | NodeKind::SelectIndices(_)
                        | NodeKind::Slice { .. }
                ) || detail.starts_with("bias")
                {
                    Violation::InvalidNode { node: id, detail }
                } else {
                    Violation::ShapeMismatch { node: id, detail }
                };
                violations.push(v);
            }
        }
    }

    if sink.index() < n {
        let mut reaches = vec![false; n];
        reaches[sink.index()] = true;
        let mut stack = vec![sink.index()];
        while let Some(i) = stack.pop() {
            for p in &nodes[i].preds {
                if !reaches[p.index()] {
                    reaches[p.index()] = true;
                    stack.push(p.index());
                }
            }
        }
        for i in 0..n {
            if !reaches[i] {
                if successors[i].is_empty() {
                    violations.push(Violation::ExtraSink(NodeId(i)));
                } else {
                    violations.push(Violation::Dangling(NodeId(i)));
                }
            }
        }
    }

    if !violations.is_empty() {
        return Err(ValidationReport { violations });
    }
    Ok(Plan {
        order,
        shapes: shapes.into_iter().map(|s| s.expect("shape inferred")).collect(),
        input: inputs[0],
        successors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, Matrix, Node};

    fn affine(rows: usize, cols: usize) -> NodeKind {
        NodeKind::Affine {
            weight: Matrix::new(rows, cols, vec![1.0; rows * cols]).unwrap(),
            bias: vec![0.0; rows],
        }
    }

    #[test]
    fn two_node_cycle_reports_one_cycle() {
        let nodes = vec![
            Node { kind: NodeKind::Input(TensorShape::vector(1).unwrap()), preds: vec![] },
            Node { kind: NodeKind::Add, preds: vec![NodeId(0), NodeId(2)] },
            Node { kind: NodeKind::Relu, preds: vec![NodeId(1)] },
        ];
        let report = validate(&Graph::from_parts(nodes, NodeId(2)));
        let cycles: Vec<_> = report
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::Cycle(_)))
            .collect();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0], &Violation::Cycle(vec![NodeId(1), NodeId(2)]));
    }

    #[test]
    fn minimal_chain_is_valid() {
        let mut b = GraphBuilder::new();
        let x = b.input(2).unwrap();
        let y = b.add_node(affine(3, 2), vec![x]).unwrap();
        let g = b.finish(y).unwrap();
        assert!(validate(&g).is_ok());
    }

    #[test]
    fn affine_shape_mismatch_names_node() {
        let nodes = vec![
            Node { kind: NodeKind::Input(TensorShape::vector(3).unwrap()), preds: vec![] },
            Node { kind: affine(3, 2), preds: vec![NodeId(0)] },
        ];
        let report = validate(&Graph::from_parts(nodes, NodeId(1)));
        assert_eq!(report.len(), 1);
        match &report.violations[0] {
            Violation::ShapeMismatch { node, detail } => {
                assert_eq!(*node, NodeId(1));
                assert!(detail.contains("3 elements"), "{detail}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extra_sinks_and_inputs_are_reported() {
        let shape = TensorShape::vector(1).unwrap();
        let nodes = vec![
            Node { kind: NodeKind::Input(shape.clone()), preds: vec![] },
            Node { kind: NodeKind::Input(shape.clone()), preds: vec![] },
            Node { kind: NodeKind::Relu, preds: vec![NodeId(0)] },
            Node { kind: NodeKind::Negate, preds: vec![NodeId(0)] },
        ];
        let report = validate(&Graph::from_parts(nodes, NodeId(2)));
        assert!(report.violations.contains(&Violation::MultipleInputs(vec![NodeId(0), NodeId(1)])));
        assert!(report.violations.contains(&Violation::ExtraSink(NodeId(1))));
        assert!(report.violations.contains(&Violation::ExtraSink(NodeId(3))));
    }

    #[test]
    fn arity_and_unknown_preds() {
        let shape = TensorShape::vector(1).unwrap();
        let nodes = vec![
            Node { kind: NodeKind::Input(shape), preds: vec![] },
            Node { kind: NodeKind::Add, preds: vec![NodeId(0)] },
        ];
        let report = validate(&Graph::from_parts(nodes.clone(), NodeId(1)));
        assert!(report
            .violations
            .contains(&Violation::Arity { node: NodeId(1), expected: 2, found: 1 }));

        let mut bad = nodes;
        bad[1] = Node { kind: NodeKind::Relu, preds: vec![NodeId(7)] };
        let report = validate(&Graph::from_parts(bad, NodeId(1)));
        assert!(report
            .violations
            .contains(&Violation::UnknownPredecessor { node: NodeId(1), pred: NodeId(7) }));
    }
}
