use super::{Graph, GraphBuilder, GraphError, NodeId};

/// Splices `inner` into `outer` at node `at`.
///
/// When `at` is `outer`'s input, the result computes `outer ∘ inner` and its
/// input is `inner`'s input. Otherwise every consumer of `at` reads
/// `inner(at)` instead, so `inner` must map `at`'s shape to itself.
pub fn stitch(outer: &Graph, inner: &Graph, at: NodeId) -> Result<Graph, GraphError> {
    let outer_input = outer.input()?;
    let at_shape = outer.shape(at)?.clone();
    let inner_out = inner.output_shape()?.clone();
    if inner_out.numel() != at_shape.numel() {
        return Err(GraphError::Shape {
            node: format!("stitch point {}", at.0),
            detail: format!("inner graph produces {inner_out}, expected {at_shape}"),
        });
    }
    let mut b = GraphBuilder::new();
    let mut map = vec![NodeId(usize::MAX); outer.len()];
    for &id in outer.topological_order()? {
        let node = &outer.nodes()[id.index()];
        let new_id = if id == outer_input {
            if id == at {
                let x = b.input_shaped(inner.input_shape()?.clone())?;
                let copy = b.inline(inner, x)?;
                reshape(&mut b, copy[inner.sink().index()], &at_shape)?
            } else {
                b.input_shaped(node.kind_input_shape())?
            }
        } else {
            let preds = node.preds.iter().map(|p| map[p.index()]).collect();
            let plain = b.add_node(node.kind.clone(), preds)?;
            if id == at {
                if inner.input_shape()?.numel() != at_shape.numel() {
                    return Err(GraphError::Shape {
                        node: format!("stitch point {}", at.0),
                        detail: format!(
                            "inner graph reads {}, node produces {at_shape}",
                            inner.input_shape()?
                        ),
                    });
                }
                let copy = b.inline(inner, plain)?;
                reshape(&mut b, copy[inner.sink().index()], &at_shape)?
            } else {
                plain
            }
        };
        map[id.index()] = new_id;
    }
    b.finish(map[outer.sink().index()])
}

fn reshape(
    b: &mut GraphBuilder,
    node: NodeId,
    shape: &super::TensorShape,
) -> Result<NodeId, GraphError> {
    if b.shape(node)? == shape || shape.rank() != 1 {
        Ok(node)
    } else {
        b.slice(node, 0, shape.numel())
    }
}

impl super::Node {
    fn kind_input_shape(&self) -> super::TensorShape {
        match &self.kind {
            super::NodeKind::Input(shape) => shape.clone(),
            _ => unreachable!("only called on the input node"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{evaluate_flat, Matrix};

    fn scalar_affine(w: f64, c: f64) -> Graph {
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let y = b.affine(x, Matrix::new(1, 1, vec![w]).unwrap(), vec![c]).unwrap();
        b.finish(y).unwrap()
    }

    #[test]
    fn composes_at_input() {
        let f = scalar_affine(2.0, 0.0);
        let g = scalar_affine(1.0, 1.0);
        let h = stitch(&g, &f, g.input().unwrap()).unwrap();
        assert_eq!(evaluate_flat(&h, &[3.0]).unwrap(), vec![7.0]);
    }

    #[test]
    fn splices_after_inner_node() {
        // g(y) = relu(y) + 1 with f(x) = 2x spliced after the relu
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let r = b.relu(x).unwrap();
        let y = b.affine(r, Matrix::new(1, 1, vec![1.0]).unwrap(), vec![1.0]).unwrap();
        let g = b.finish(y).unwrap();
        let h = stitch(&g, &scalar_affine(2.0, 0.0), r).unwrap();
        assert_eq!(evaluate_flat(&h, &[3.0]).unwrap(), vec![7.0]);
        assert_eq!(evaluate_flat(&h, &[-3.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn mismatched_shapes_fail() {
        let mut b = GraphBuilder::new();
        let x = b.input(2).unwrap();
        let y = b.relu(x).unwrap();
        let two = b.finish(y).unwrap();
        let f = scalar_affine(2.0, 0.0);
        assert!(matches!(stitch(&f, &two, f.input().unwrap()), Err(GraphError::Shape { .. })));
    }
}
