//! Exact piecewise-linear building blocks expressed with ReLUs.
//!
//! Every gadget reduces to the identity `max(a, b) = relu(a - b) + b`:
//!
//! * `min(a, b) = -max(-a, -b)`
//! * `|a| = max(a, -a)`
//! * the L∞ norm is a reduction tree of pairwise maxima over `|x|`
//! * box projection is `min(max(x, lo), hi)` with the bounds held in
//!   `Parameter` nodes
//!
//! Reductions pair neighbours level by level, `(x0, x1), (x2, x3), ...`, and
//! carry an odd trailing element to the next level, so a reduction over `d`
//! elements has depth `ceil(log2 d)`.

use super::{Graph, GraphBuilder, GraphError, Hyperrectangle, NodeId};

impl GraphBuilder {
    /// Elementwise `relu(a - b) + b`.
    pub fn max_pair(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        let d = self.sub(a, b)?;
        let r = self.relu(d)?;
        self.add(r, b)
    }

    /// Elementwise `-max(-a, -b)`.
    pub fn min_pair(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        let na = self.neg(a)?;
        let nb = self.neg(b)?;
        let m = self.max_pair(na, nb)?;
        self.neg(m)
    }

    /// Elementwise `max(a, -a)`.
    pub fn abs(&mut self, a: NodeId) -> Result<NodeId, GraphError> {
        let na = self.neg(a)?;
        self.max_pair(a, na)
    }

    /// Maximum over all elements of `x` as a one-element vector.
    pub fn reduce_max_tree(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        self.reduce_tree(x, Self::max_pair)
    }

    /// Minimum over all elements of `x` as a one-element vector.
    pub fn reduce_min_tree(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        self.reduce_tree(x, Self::min_pair)
    }

    fn reduce_tree(
        &mut self,
        x: NodeId,
        pair: fn(&mut Self, NodeId, NodeId) -> Result<NodeId, GraphError>,
    ) -> Result<NodeId, GraphError> {
        let mut current = x;
        let mut dim = self.dim(x)?;
        while dim > 1 {
            let half = dim / 2;
            let evens = self.select(current, (0..half).map(|i| 2 * i).collect())?;
            let odds = self.select(current, (0..half).map(|i| 2 * i + 1).collect())?;
            let paired = pair(self, evens, odds)?;
            current = if dim % 2 == 1 {
                let last = self.slice(current, dim - 1, dim)?;
                self.concat(&[paired, last])?
            } else {
                paired
            };
            dim = dim.div_ceil(2);
        }
        Ok(current)
    }

    /// `‖x‖∞` as a one-element vector.
    pub fn linf_norm(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        let a = self.abs(x)?;
        self.reduce_max_tree(a)
    }

    /// Projection of `x` onto `bounds`, i.e. `min(max(x, lo), hi)`.
    pub fn project(&mut self, x: NodeId, bounds: &Hyperrectangle) -> Result<NodeId, GraphError> {
        if self.dim(x)? != bounds.dim() {
            return Err(GraphError::Shape {
                node: format!("projection of node {}", x.0),
                detail: format!("box has {} dimensions, value has {}", bounds.dim(), self.dim(x)?),
            });
        }
        let lo = self.parameter(bounds.lower().to_vec())?;
        let hi = self.parameter(bounds.upper().to_vec())?;
        let above = self.max_pair(x, lo)?;
        self.min_pair(above, hi)
    }
}

fn check_dim(dim: usize) -> Result<(), GraphError> {
    if dim == 0 {
        return Err(GraphError::Construction("gadget dimension must be at least 1".into()));
    }
    Ok(())
}

fn pairwise(dim: usize, min: bool) -> Result<Graph, GraphError> {
    check_dim(dim)?;
    let mut b = GraphBuilder::new();
    let x = b.input(2 * dim)?;
    let lhs = b.slice(x, 0, dim)?;
    let rhs = b.slice(x, dim, 2 * dim)?;
    let out = if min { b.min_pair(lhs, rhs)? } else { b.max_pair(lhs, rhs)? };
    b.finish(out)
}

/// Graph from `(a ‖ b)` (length `2·dim`) to the elementwise maximum.
pub fn max_gadget(dim: usize) -> Result<Graph, GraphError> {
    pairwise(dim, false)
}

/// Graph from `(a ‖ b)` (length `2·dim`) to the elementwise minimum.
pub fn min_gadget(dim: usize) -> Result<Graph, GraphError> {
    pairwise(dim, true)
}

pub fn abs_gadget(dim: usize) -> Result<Graph, GraphError> {
    check_dim(dim)?;
    let mut b = GraphBuilder::new();
    let x = b.input(dim)?;
    let out = b.abs(x)?;
    b.finish(out)
}

/// Graph from a difference vector to its L∞ norm.
pub fn linf_norm_gadget(dim: usize) -> Result<Graph, GraphError> {
    check_dim(dim)?;
    let mut b = GraphBuilder::new();
    let x = b.input(dim)?;
    let out = b.linf_norm(x)?;
    b.finish(out)
}

pub fn project_gadget(bounds: &Hyperrectangle) -> Result<Graph, GraphError> {
    check_dim(bounds.dim())?;
    let mut b = GraphBuilder::new();
    let x = b.input(bounds.dim())?;
    let out = b.project(x, bounds)?;
    b.finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{evaluate_flat, NodeKind};

    #[test]
    fn spot_values() {
        assert_eq!(evaluate_flat(&max_gadget(1).unwrap(), &[2.0, 5.0]).unwrap(), vec![5.0]);
        assert_eq!(evaluate_flat(&min_gadget(1).unwrap(), &[4.0, -1.0]).unwrap(), vec![-1.0]);
        assert_eq!(evaluate_flat(&abs_gadget(1).unwrap(), &[-3.0]).unwrap(), vec![3.0]);
        assert_eq!(
            evaluate_flat(&linf_norm_gadget(3).unwrap(), &[1.0, -4.0, 2.0]).unwrap(),
            vec![4.0]
        );
        let unit = Hyperrectangle::uniform(1, 0.0, 1.0).unwrap();
        let p = project_gadget(&unit).unwrap();
        assert_eq!(evaluate_flat(&p, &[1.7]).unwrap(), vec![1.0]);
        assert_eq!(evaluate_flat(&p, &[-0.2]).unwrap(), vec![0.0]);
        assert_eq!(evaluate_flat(&p, &[0.5]).unwrap(), vec![0.5]);
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(max_gadget(0).is_err());
        assert!(linf_norm_gadget(0).is_err());
    }

    #[test]
    fn reduction_depth_is_logarithmic() {
        for d in 1..=17usize {
            let g = linf_norm_gadget(d).unwrap();
            let relus = g.nodes().iter().filter(|n| n.kind == NodeKind::Relu).count();
            // one ReLU node for the abs layer plus one per tree level
            let levels = (d as f64).log2().ceil() as usize;
            assert_eq!(relus, 1 + levels, "d = {d}");
        }
    }

    #[test]
    fn gadgets_use_only_relu_arithmetic() {
        let unit = Hyperrectangle::uniform(3, -1.0, 2.0).unwrap();
        for g in [
            max_gadget(3).unwrap(),
            min_gadget(2).unwrap(),
            abs_gadget(4).unwrap(),
            linf_norm_gadget(5).unwrap(),
            project_gadget(&unit).unwrap(),
        ] {
            for node in g.nodes() {
                assert!(
                    !matches!(
                        node.kind,
                        NodeKind::MaxPairwise
                            | NodeKind::MinPairwise
                            | NodeKind::ClampConst { .. }
                            | NodeKind::ReduceMax
                    ),
                    "native {} node in gadget",
                    node.kind.name()
                );
            }
        }
    }
}
