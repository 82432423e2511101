use super::{Graph, GraphBuilder, GraphError, Hyperrectangle, NodeId, NodeKind};

/// A graph rewritten without native piecewise nodes, plus where each
/// original node ended up.
#[derive(Debug, Clone)]
pub struct Lowered {
    pub graph: Graph,
    /// `map[old.index()]` is the node computing `old`'s value.
    pub map: Vec<NodeId>,
}

/// Rewrites `MaxPairwise`, `MinPairwise`, `ClampConst` and `ReduceMax` into
/// their ReLU gadgets so that the only nonlinear kind left is `Relu`.
pub fn lower_to_relu(graph: &Graph) -> Result<Lowered, GraphError> {
    let order = graph.topological_order()?;
    let mut b = GraphBuilder::new();
    let mut map = vec![NodeId(usize::MAX); graph.len()];
    for &id in order {
        let node = &graph.nodes()[id.index()];
        let preds: Vec<NodeId> = node.preds.iter().map(|p| map[p.index()]).collect();
        let new_id = match &node.kind {
            NodeKind::Input(shape) => b.input_shaped(shape.clone())?,
            NodeKind::MaxPairwise => b.max_pair(preds[0], preds[1])?,
            NodeKind::MinPairwise => b.min_pair(preds[0], preds[1])?,
            NodeKind::ClampConst { lo, hi } => {
                let bounds = Hyperrectangle::new(lo.clone(), hi.clone())?;
                b.project(preds[0], &bounds)?
            }
            NodeKind::ReduceMax => b.reduce_max_tree(preds[0])?,
            kind => b.add_node(kind.clone(), preds)?,
        };
        map[id.index()] = new_id;
    }
    let sink = map[graph.sink().index()];
    Ok(Lowered { graph: b.finish(sink)?, map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::evaluate_all;

    #[test]
    fn lowering_preserves_values_on_grid_points() {
        let mut b = GraphBuilder::new();
        let x = b.input(4).unwrap();
        let c = b.clamp(x, vec![-0.5; 4], vec![0.5; 4]).unwrap();
        let s = b.select(x, vec![3, 2, 1, 0]).unwrap();
        let mx = b.max_node(c, s).unwrap();
        let mn = b.min_node(c, s).unwrap();
        let both = b.concat(&[mx, mn]).unwrap();
        let r = b.reduce_max(both).unwrap();
        let g = b.finish(r).unwrap();
        let lowered = lower_to_relu(&g).unwrap();
        assert!(lowered.graph.nodes().iter().all(|n| n.kind.is_linear() || n.kind == NodeKind::Relu));
        // quarter-grid inputs keep every intermediate exactly representable
        for a in -4..=4 {
            for bb in -4..=4 {
                let input = [a as f64 / 4.0, bb as f64 / 4.0, -(a as f64) / 8.0, 0.25];
                let orig = evaluate_all(&g, &input).unwrap();
                let low = evaluate_all(&lowered.graph, &input).unwrap();
                for id in g.ids() {
                    assert_eq!(orig[id.index()], low[lowered.map[id.index()].index()]);
                }
            }
        }
    }
}
