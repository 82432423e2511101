use thiserror::Error;

use super::{Graph, GraphError, NodeId, NodeKind, TensorShape, Value};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("input has {found} elements, graph expects shape {expected}")]
    InputShape { expected: TensorShape, found: String },
    #[error("non-finite input entry {0}")]
    NonFiniteInput(usize),
    #[error("{0} produced a non-finite value")]
    NonFinite(NodeId),
}

/// Forward walk returning the sink value.
pub fn evaluate(graph: &Graph, input: &Value) -> Result<Value, EvalError> {
    let expected = graph.input_shape()?;
    if input.shape() != expected {
        return Err(EvalError::InputShape {
            expected: expected.clone(),
            found: input.shape().to_string(),
        });
    }
    let out = evaluate_flat(graph, input.data())?;
    Ok(Value::new(graph.output_shape()?.clone(), out)?)
}

/// Forward walk on a flat input; the sink value is returned flat.
pub fn evaluate_flat(graph: &Graph, input: &[f64]) -> Result<Vec<f64>, EvalError> {
    let mut values = evaluate_all(graph, input)?;
    Ok(std::mem::take(&mut values[graph.sink().index()]))
}

/// Forward walk returning the value of every node, indexed by node id.
pub fn evaluate_all(graph: &Graph, input: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
    let plan = graph.plan()?;
    let expected = &plan.shapes[plan.input.index()];
    if input.len() != expected.numel() {
        return Err(EvalError::InputShape {
            expected: expected.clone(),
            found: input.len().to_string(),
        });
    }
    if let Some(pos) = input.iter().position(|x| !x.is_finite()) {
        return Err(EvalError::NonFiniteInput(pos));
    }
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); graph.len()];
    for &id in &plan.order {
        let node = &graph.nodes()[id.index()];
        let out = if id == plan.input {
            input.to_vec()
        } else {
            let preds: Vec<&[f64]> = node.preds.iter().map(|p| values[p.index()].as_slice()).collect();
            let pred_shapes: Vec<&TensorShape> =
                node.preds.iter().map(|p| &plan.shapes[p.index()]).collect();
            apply(&node.kind, &preds, &pred_shapes, &plan.shapes[id.index()])
        };
        if out.iter().any(|x| !x.is_finite()) {
            return Err(EvalError::NonFinite(id));
        }
        values[id.index()] = out;
    }
    Ok(values)
}

/// Pointwise semantics of a single node.
pub(crate) fn apply(
    kind: &NodeKind,
    preds: &[&[f64]],
    pred_shapes: &[&TensorShape],
    out_shape: &TensorShape,
) -> Vec<f64> {
    match kind {
        NodeKind::Input(_) => unreachable!("input is fed by the caller"),
        NodeKind::Parameter(_, values) => values.clone(),
        NodeKind::Affine { weight, bias } => {
            let x = preds[0];
            (0..weight.rows())
                .map(|i| {
                    let mut acc = 0.0;
                    for (w, xj) in weight.row(i).iter().zip(x) {
                        acc += w * xj;
                    }
                    acc + bias[i]
                })
                .collect()
        }
        NodeKind::Relu => preds[0].iter().map(|&x| relu(x)).collect(),
        NodeKind::MaxPairwise => zip_map(preds, f64::max),
        NodeKind::MinPairwise => zip_map(preds, f64::min),
        NodeKind::Add => zip_map(preds, |a, b| a + b),
        NodeKind::Subtract => zip_map(preds, |a, b| a - b),
        NodeKind::Negate => preds[0].iter().map(|x| -x).collect(),
        NodeKind::ScaleConst(s) => preds[0].iter().map(|x| s * x).collect(),
        NodeKind::Concat(axis) => concat(preds, pred_shapes, out_shape, *axis),
        NodeKind::Slice { start, end } => preds[0][*start..*end].to_vec(),
        NodeKind::SelectIndices(indices) => indices.iter().map(|&i| preds[0][i]).collect(),
        NodeKind::ClampConst { lo, hi } => preds[0]
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(x, (l, h))| x.max(*l).min(*h))
            .collect(),
        NodeKind::ReduceMax => {
            let x = preds[0];
            vec![x[1..].iter().fold(x[0], |m, &v| m.max(v))]
        }
    }
}

pub(crate) fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn zip_map(preds: &[&[f64]], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    preds[0].iter().zip(preds[1]).map(|(&a, &b)| f(a, b)).collect()
}

/// Row-major concatenation along `axis`.
pub(crate) fn concat<T: Clone>(
    preds: &[&[T]],
    pred_shapes: &[&TensorShape],
    out_shape: &TensorShape,
    axis: usize,
) -> Vec<T> {
    let outer: usize = out_shape.dims()[..axis].iter().product();
    let mut out = Vec::with_capacity(out_shape.numel());
    for o in 0..outer {
        for (p, shape) in preds.iter().zip(pred_shapes) {
            let chunk: usize = shape.dims()[axis..].iter().product();
            out.extend_from_slice(&p[o * chunk..(o + 1) * chunk]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, Matrix};

    #[test]
    fn affine_two_x_plus_one() {
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let y = b.affine(x, Matrix::new(1, 1, vec![2.0]).unwrap(), vec![1.0]).unwrap();
        let g = b.finish(y).unwrap();
        let out = evaluate(&g, &Value::scalar(3.0).unwrap()).unwrap();
        assert_eq!(out.data(), &[7.0]);
    }

    #[test]
    fn wrong_input_shape_is_rejected() {
        let mut b = GraphBuilder::new();
        let x = b.input(2).unwrap();
        let y = b.relu(x).unwrap();
        let g = b.finish(y).unwrap();
        let err = evaluate(&g, &Value::scalar(1.0).unwrap()).unwrap_err();
        assert!(matches!(err, EvalError::InputShape { .. }));
    }

    #[test]
    fn overflow_names_the_node() {
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let y = b.scale(x, 1e300).unwrap();
        let z = b.scale(y, 1e300).unwrap();
        let g = b.finish(z).unwrap();
        let err = evaluate_flat(&g, &[10.0]).unwrap_err();
        assert_eq!(err, EvalError::NonFinite(z));
    }

    #[test]
    fn concat_along_second_axis() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0];
        let sa = TensorShape::new(vec![2, 2]).unwrap();
        let sb = TensorShape::new(vec![2, 1]).unwrap();
        let out = TensorShape::new(vec![2, 3]).unwrap();
        let r = concat(&[&a[..], &b[..]], &[&sa, &sb], &out, 1);
        assert_eq!(r, vec![1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
    }

    #[test]
    fn native_kinds() {
        let mut b = GraphBuilder::new();
        let x = b.input(3).unwrap();
        let c = b.clamp(x, vec![0.0; 3], vec![1.0; 3]).unwrap();
        let s = b.select(x, vec![2, 0, 1]).unwrap();
        let m = b.max_node(c, s).unwrap();
        let r = b.reduce_max(m).unwrap();
        let g = b.finish(r).unwrap();
        let all = evaluate_all(&g, &[1.5, -2.0, 0.25]).unwrap();
        assert_eq!(all[c.index()], vec![1.0, 0.0, 0.25]);
        assert_eq!(all[s.index()], vec![0.25, 1.5, -2.0]);
        assert_eq!(all[m.index()], vec![1.0, 1.5, 0.25]);
        assert_eq!(all[r.index()], vec![1.5]);
    }
}
