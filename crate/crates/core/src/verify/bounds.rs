use std::collections::BTreeMap;

use crate::graph::{lower_to_relu, Graph, Hyperrectangle, NodeId, NodeKind, TensorShape};

use super::{BoundMethod, VerifyError};

/// Per-node elementwise enclosures, indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<Vec<f64>>,
    upper: Vec<Vec<f64>>,
    sink: NodeId,
}

impl Bounds {
    pub fn lower(&self, id: NodeId) -> &[f64] {
        &self.lower[id.index()]
    }

    pub fn upper(&self, id: NodeId) -> &[f64] {
        &self.upper[id.index()]
    }

    pub fn sink_lower(&self) -> &[f64] {
        self.lower(self.sink)
    }

    pub fn sink_upper(&self) -> &[f64] {
        self.upper(self.sink)
    }

    /// Whether `values` (indexed by node id, as from `evaluate_all`) lie in
    /// the bounds up to `tol`. Returns the first offending node.
    pub fn check_containment(&self, values: &[Vec<f64>], tol: f64) -> Result<(), NodeId> {
        for (i, v) in values.iter().enumerate() {
            let ok = v
                .iter()
                .zip(self.lower[i].iter().zip(&self.upper[i]))
                .all(|(x, (l, u))| *l - tol <= *x && *x <= *u + tol);
            if !ok {
                return Err(NodeId(i));
            }
        }
        Ok(())
    }
}

fn check_box(graph: &Graph, region: &Hyperrectangle) -> Result<(), VerifyError> {
    let expected = graph.input_dim()?;
    if region.dim() != expected {
        return Err(VerifyError::Dimension { expected, found: region.dim() });
    }
    Ok(())
}

/// Interval bound propagation in a single forward walk.
///
/// Affine rows accumulate in the same order as evaluation, so sampled
/// values are contained without any rounding slack.
pub fn interval_bounds(graph: &Graph, region: &Hyperrectangle) -> Result<Bounds, VerifyError> {
    check_box(graph, region)?;
    let n = graph.len();
    let mut lower = vec![Vec::new(); n];
    let mut upper = vec![Vec::new(); n];
    let input = graph.input()?;
    for &id in graph.topological_order()? {
        let (lo, hi) = if id == input {
            (region.lower().to_vec(), region.upper().to_vec())
        } else {
            transfer(graph, id, &lower, &upper)?
        };
        lower[id.index()] = lo;
        upper[id.index()] = hi;
    }
    Ok(Bounds { lower, upper, sink: graph.sink() })
}

/// Interval transformer of one node given its predecessors' bounds.
fn transfer(
    graph: &Graph,
    id: NodeId,
    lower: &[Vec<f64>],
    upper: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>), VerifyError> {
    let node = &graph.nodes()[id.index()];
    let p = |k: usize| node.preds[k].index();
    let zip2 = |f: &dyn Fn(f64, f64) -> f64, a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
    };
    Ok(match &node.kind {
        NodeKind::Input(_) => unreachable!("input bounds come from the box"),
        NodeKind::Parameter(_, values) => (values.clone(), values.clone()),
        NodeKind::Affine { weight, bias } => {
            let (l, u) = (&lower[p(0)], &upper[p(0)]);
            let mut lo = Vec::with_capacity(weight.rows());
            let mut hi = Vec::with_capacity(weight.rows());
            for i in 0..weight.rows() {
                let (mut al, mut au) = (0.0, 0.0);
                for (j, &w) in weight.row(i).iter().enumerate() {
                    if w >= 0.0 {
                        al += w * l[j];
                        au += w * u[j];
                    } else {
                        al += w * u[j];
                        au += w * l[j];
                    }
                }
                lo.push(al + bias[i]);
                hi.push(au + bias[i]);
            }
            (lo, hi)
        }
        NodeKind::Relu => (
            lower[p(0)].iter().map(|&x| relu(x)).collect(),
            upper[p(0)].iter().map(|&x| relu(x)).collect(),
        ),
        NodeKind::MaxPairwise => (
            zip2(&f64::max, &lower[p(0)], &lower[p(1)]),
            zip2(&f64::max, &upper[p(0)], &upper[p(1)]),
        ),
        NodeKind::MinPairwise => (
            zip2(&f64::min, &lower[p(0)], &lower[p(1)]),
            zip2(&f64::min, &upper[p(0)], &upper[p(1)]),
        ),
        NodeKind::Add => (
            zip2(&|a, b| a + b, &lower[p(0)], &lower[p(1)]),
            zip2(&|a, b| a + b, &upper[p(0)], &upper[p(1)]),
        ),
        NodeKind::Subtract => (
            zip2(&|a, b| a - b, &lower[p(0)], &upper[p(1)]),
            zip2(&|a, b| a - b, &upper[p(0)], &lower[p(1)]),
        ),
        NodeKind::Negate => (
            upper[p(0)].iter().map(|x| -x).collect(),
            lower[p(0)].iter().map(|x| -x).collect(),
        ),
        NodeKind::ScaleConst(s) => {
            let a: Vec<f64> = lower[p(0)].iter().map(|x| s * x).collect();
            let b: Vec<f64> = upper[p(0)].iter().map(|x| s * x).collect();
            if *s >= 0.0 {
                (a, b)
            } else {
                (b, a)
            }
        }
        NodeKind::Concat(axis) => {
            let shapes: Vec<&TensorShape> =
                node.preds.iter().map(|q| graph.shape(*q)).collect::<Result<_, _>>()?;
            let out = graph.shape(id)?;
            let lo: Vec<&[f64]> = node.preds.iter().map(|q| lower[q.index()].as_slice()).collect();
            let hi: Vec<&[f64]> = node.preds.iter().map(|q| upper[q.index()].as_slice()).collect();
            (
                crate::graph::eval_concat(&lo, &shapes, out, *axis),
                crate::graph::eval_concat(&hi, &shapes, out, *axis),
            )
        }
        NodeKind::Slice { start, end } => (
            lower[p(0)][*start..*end].to_vec(),
            upper[p(0)][*start..*end].to_vec(),
        ),
        NodeKind::SelectIndices(indices) => (
            indices.iter().map(|&i| lower[p(0)][i]).collect(),
            indices.iter().map(|&i| upper[p(0)][i]).collect(),
        ),
        NodeKind::ClampConst { lo, hi } => {
            let clamp = |v: &[f64]| -> Vec<f64> {
                v.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(x, (l, h))| x.max(*l).min(*h))
                    .collect()
            };
            (clamp(&lower[p(0)]), clamp(&upper[p(0)]))
        }
        NodeKind::ReduceMax => {
            let fold = |v: &[f64]| vec![v[1..].iter().fold(v[0], |m, &x| m.max(x))];
            (fold(&lower[p(0)]), fold(&upper[p(0)]))
        }
    })
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Backward linear-relaxation bounds.
///
/// The graph is lowered so that ReLU is the only nonlinearity; every ReLU
/// pre-activation and the sink then get linear lower and upper bounding
/// functions of the input, propagated backward through the DAG with the
/// triangle relaxation. All results are intersected with interval bounds.
pub fn backward_linear_bounds(graph: &Graph, region: &Hyperrectangle) -> Result<Bounds, VerifyError> {
    let ibp = interval_bounds(graph, region)?;
    let lowered = lower_to_relu(graph)?;
    let engine = Engine::new(&lowered.graph)?;
    let rb = engine
        .bounds(region, &Phases::new(), BoundMethod::BackwardLinear)
        .expect("no phase constraints");
    let mut lower = ibp.lower;
    let mut upper = ibp.upper;
    for id in graph.ids() {
        let mapped = lowered.map[id.index()].index();
        intersect(
            &mut lower[id.index()],
            &mut upper[id.index()],
            &rb.bounds.lower[mapped],
            &rb.bounds.upper[mapped],
        );
    }
    Ok(Bounds { lower, upper, sink: graph.sink() })
}

/// Tightens `[lo, hi]` by `[l2, u2]`, keeping the original entry where
/// rounding makes the intersection empty.
fn intersect(lo: &mut [f64], hi: &mut [f64], l2: &[f64], u2: &[f64]) {
    for i in 0..lo.len() {
        let l = lo[i].max(l2[i]);
        let u = hi[i].min(u2[i]);
        if l <= u {
            lo[i] = l;
            hi[i] = u;
        }
    }
}

/// A scalar ReLU: `(relu node, element)`.
pub(crate) type Unit = (NodeId, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Phase {
    Active,
    Inactive,
}

pub(crate) type Phases = BTreeMap<Unit, Phase>;

/// Bounds of a region, with the (phase-clipped) pre-activation bounds of
/// every ReLU node.
#[derive(Debug, Clone)]
pub(crate) struct RegionBounds {
    pub bounds: Bounds,
    pub pre: Vec<Option<(Vec<f64>, Vec<f64>)>>,
}

impl RegionBounds {
    pub fn sink_lower(&self) -> f64 {
        self.bounds.sink_lower()[0]
    }

    /// ReLUs whose sign is not decided on the region.
    pub fn unstable(&self) -> Vec<(Unit, f64)> {
        let mut out = Vec::new();
        for (i, pre) in self.pre.iter().enumerate() {
            if let Some((l, u)) = pre {
                for k in 0..l.len() {
                    if l[k] < 0.0 && u[k] > 0.0 {
                        out.push(((NodeId(i), k), (-l[k]).min(u[k])));
                    }
                }
            }
        }
        out
    }
}

/// Bound computation over a fixed ReLU-only graph, reused across regions.
pub(crate) struct Engine<'g> {
    pub graph: &'g Graph,
    pub order: Vec<NodeId>,
    pub input: NodeId,
    pos: Vec<usize>,
    dims: Vec<usize>,
    /// For concat nodes: source `(pred slot, element)` of every output.
    layouts: Vec<Option<Vec<(usize, usize)>>>,
    targets: Vec<bool>,
}

impl<'g> Engine<'g> {
    pub fn new(graph: &'g Graph) -> Result<Self, VerifyError> {
        let order = graph.topological_order()?.to_vec();
        let n = graph.len();
        let mut pos = vec![0; n];
        for (k, id) in order.iter().enumerate() {
            pos[id.index()] = k;
        }
        let mut dims = vec![0; n];
        let mut layouts = vec![None; n];
        let mut targets = vec![false; n];
        for id in graph.ids() {
            dims[id.index()] = graph.shape(id)?.numel();
            let node = &graph.nodes()[id.index()];
            match &node.kind {
                NodeKind::MaxPairwise | NodeKind::MinPairwise | NodeKind::ClampConst { .. } | NodeKind::ReduceMax => {
                    return Err(VerifyError::Config(format!(
                        "{id} is a native {} node; lower the graph first",
                        node.kind.name()
                    )))
                }
                NodeKind::Concat(axis) => {
                    let tagged: Vec<Vec<(usize, usize)>> = node
                        .preds
                        .iter()
                        .enumerate()
                        .map(|(slot, q)| Ok((0..graph.shape(*q)?.numel()).map(|e| (slot, e)).collect()))
                        .collect::<Result<_, VerifyError>>()?;
                    let refs: Vec<&[(usize, usize)]> = tagged.iter().map(Vec::as_slice).collect();
                    let shapes: Vec<&TensorShape> =
                        node.preds.iter().map(|q| graph.shape(*q)).collect::<Result<_, _>>()?;
                    layouts[id.index()] =
                        Some(crate::graph::eval_concat(&refs, &shapes, graph.shape(id)?, *axis));
                }
                NodeKind::Relu => targets[node.preds[0].index()] = true,
                _ => {}
            }
        }
        targets[graph.sink().index()] = true;
        for id in graph.ids() {
            if matches!(graph.nodes()[id.index()].kind, NodeKind::Input(_) | NodeKind::Parameter(..)) {
                targets[id.index()] = false;
            }
        }
        Ok(Engine { graph, order, input: graph.input()?, pos, dims, layouts, targets })
    }

    /// Bounds over `{ w ∈ region : fixed ReLUs have their phase }`, or
    /// `None` when the phases are infeasible on the region.
    pub fn bounds(&self, region: &Hyperrectangle, phases: &Phases, method: BoundMethod) -> Option<RegionBounds> {
        let n = self.graph.len();
        let mut lower = vec![Vec::new(); n];
        let mut upper = vec![Vec::new(); n];
        let mut pre: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; n];
        for &id in &self.order {
            let node = &self.graph.nodes()[id.index()];
            if id == self.input {
                lower[id.index()] = region.lower().to_vec();
                upper[id.index()] = region.upper().to_vec();
                continue;
            }
            if node.kind == NodeKind::Relu {
                let z = node.preds[0].index();
                let mut l = lower[z].clone();
                let mut u = upper[z].clone();
                for ((_, k), phase) in phases.range((id, 0)..=(id, usize::MAX)) {
                    match phase {
                        Phase::Active => l[*k] = l[*k].max(0.0),
                        Phase::Inactive => u[*k] = u[*k].min(0.0),
                    }
                    if l[*k] > u[*k] {
                        return None;
                    }
                }
                lower[id.index()] = l.iter().map(|&x| relu(x)).collect();
                upper[id.index()] = u.iter().map(|&x| relu(x)).collect();
                pre[id.index()] = Some((l, u));
                continue;
            }
            let (mut lo, mut hi) = transfer(self.graph, id, &lower, &upper).expect("validated graph");
            if method == BoundMethod::BackwardLinear && self.targets[id.index()] {
                let (bl, bu) = self.backward(id, &lower, &upper, &pre);
                intersect(&mut lo, &mut hi, &bl, &bu);
            }
            lower[id.index()] = lo;
            upper[id.index()] = hi;
        }
        Some(RegionBounds { bounds: Bounds { lower, upper, sink: self.graph.sink() }, pre })
    }

    /// Linear bounds of `target` as functions of the input, concretized
    /// over the input box.
    fn backward(
        &self,
        target: NodeId,
        lower: &[Vec<f64>],
        upper: &[Vec<f64>],
        pre: &[Option<(Vec<f64>, Vec<f64>)>],
    ) -> (Vec<f64>, Vec<f64>) {
        let dt = self.dims[target.index()];
        let n = self.graph.len();
        let mut acc_l: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut acc_u: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut c_l = vec![0.0; dt];
        let mut c_u = vec![0.0; dt];
        let mut eye = vec![0.0; dt * dt];
        for r in 0..dt {
            eye[r * dt + r] = 1.0;
        }
        acc_l[target.index()] = Some(eye.clone());
        acc_u[target.index()] = Some(eye);
        let mut out_l = c_l.clone();
        let mut out_u = c_u.clone();
        let mut input_reached = false;

        for p in (0..=self.pos[target.index()]).rev() {
            let id = self.order[p];
            let (Some(al), Some(au)) = (acc_l[id.index()].take(), acc_u[id.index()].take()) else {
                continue;
            };
            let node = &self.graph.nodes()[id.index()];
            let dim = self.dims[id.index()];
            match &node.kind {
                NodeKind::Input(_) => {
                    let (l, u) = (&lower[id.index()], &upper[id.index()]);
                    for r in 0..dt {
                        let (mut lo, mut hi) = (0.0, 0.0);
                        for j in 0..dim {
                            let a = al[r * dim + j];
                            lo += if a >= 0.0 { a * l[j] } else { a * u[j] };
                            let b = au[r * dim + j];
                            hi += if b >= 0.0 { b * u[j] } else { b * l[j] };
                        }
                        out_l[r] = lo;
                        out_u[r] = hi;
                    }
                    input_reached = true;
                }
                NodeKind::Parameter(_, values) => {
                    for r in 0..dt {
                        for j in 0..dim {
                            c_l[r] += al[r * dim + j] * values[j];
                            c_u[r] += au[r * dim + j] * values[j];
                        }
                    }
                }
                NodeKind::Affine { weight, bias } => {
                    let q = node.preds[0];
                    let cols = weight.cols();
                    for r in 0..dt {
                        for i in 0..dim {
                            c_l[r] += al[r * dim + i] * bias[i];
                            c_u[r] += au[r * dim + i] * bias[i];
                        }
                    }
                    let mut pl = vec![0.0; dt * cols];
                    let mut pu = vec![0.0; dt * cols];
                    for r in 0..dt {
                        for i in 0..dim {
                            let (a, b) = (al[r * dim + i], au[r * dim + i]);
                            if a == 0.0 && b == 0.0 {
                                continue;
                            }
                            for (j, &w) in weight.row(i).iter().enumerate() {
                                pl[r * cols + j] += a * w;
                                pu[r * cols + j] += b * w;
                            }
                        }
                    }
                    accumulate(&mut acc_l, q, &pl);
                    accumulate(&mut acc_u, q, &pu);
                }
                NodeKind::Relu => {
                    let q = node.preds[0];
                    let (l, u) = pre[id.index()].as_ref().expect("relu bounds computed");
                    let mut pl = vec![0.0; dt * dim];
                    let mut pu = vec![0.0; dt * dim];
                    for k in 0..dim {
                        let (lk, uk) = (l[k], u[k]);
                        if uk <= 0.0 {
                            continue;
                        }
                        if lk >= 0.0 {
                            for r in 0..dt {
                                pl[r * dim + k] = al[r * dim + k];
                                pu[r * dim + k] = au[r * dim + k];
                            }
                            continue;
                        }
                        let slope = uk / (uk - lk);
                        let alpha = if uk >= -lk { 1.0 } else { 0.0 };
                        for r in 0..dt {
                            let a = al[r * dim + k];
                            if a >= 0.0 {
                                pl[r * dim + k] = a * alpha;
                            } else {
                                pl[r * dim + k] = a * slope;
                                c_l[r] -= a * slope * lk;
                            }
                            let b = au[r * dim + k];
                            if b >= 0.0 {
                                pu[r * dim + k] = b * slope;
                                c_u[r] -= b * slope * lk;
                            } else {
                                pu[r * dim + k] = b * alpha;
                            }
                        }
                    }
                    accumulate(&mut acc_l, q, &pl);
                    accumulate(&mut acc_u, q, &pu);
                }
                NodeKind::Add => {
                    for &q in &node.preds {
                        accumulate(&mut acc_l, q, &al);
                        accumulate(&mut acc_u, q, &au);
                    }
                }
                NodeKind::Subtract => {
                    accumulate(&mut acc_l, node.preds[0], &al);
                    accumulate(&mut acc_u, node.preds[0], &au);
                    let nl: Vec<f64> = al.iter().map(|x| -x).collect();
                    let nu: Vec<f64> = au.iter().map(|x| -x).collect();
                    accumulate(&mut acc_l, node.preds[1], &nl);
                    accumulate(&mut acc_u, node.preds[1], &nu);
                }
                NodeKind::Negate => {
                    let nl: Vec<f64> = al.iter().map(|x| -x).collect();
                    let nu: Vec<f64> = au.iter().map(|x| -x).collect();
                    accumulate(&mut acc_l, node.preds[0], &nl);
                    accumulate(&mut acc_u, node.preds[0], &nu);
                }
                NodeKind::ScaleConst(s) => {
                    let sl: Vec<f64> = al.iter().map(|x| s * x).collect();
                    let su: Vec<f64> = au.iter().map(|x| s * x).collect();
                    accumulate(&mut acc_l, node.preds[0], &sl);
                    accumulate(&mut acc_u, node.preds[0], &su);
                }
                NodeKind::Concat(_) => {
                    let layout = self.layouts[id.index()].as_ref().expect("concat layout");
                    for (slot, &q) in node.preds.iter().enumerate() {
                        let qd = self.dims[q.index()];
                        let mut pl = vec![0.0; dt * qd];
                        let mut pu = vec![0.0; dt * qd];
                        for (k, &(s, e)) in layout.iter().enumerate() {
                            if s == slot {
                                for r in 0..dt {
                                    pl[r * qd + e] += al[r * dim + k];
                                    pu[r * qd + e] += au[r * dim + k];
                                }
                            }
                        }
                        accumulate(&mut acc_l, q, &pl);
                        accumulate(&mut acc_u, q, &pu);
                    }
                }
                NodeKind::Slice { start, .. } => {
                    let indices: Vec<usize> = (0..dim).map(|k| start + k).collect();
                    self.scatter(&mut acc_l, &mut acc_u, node.preds[0], &indices, &al, &au, dt, dim);
                }
                NodeKind::SelectIndices(indices) => {
                    self.scatter(&mut acc_l, &mut acc_u, node.preds[0], indices, &al, &au, dt, dim);
                }
                NodeKind::MaxPairwise | NodeKind::MinPairwise | NodeKind::ClampConst { .. } | NodeKind::ReduceMax => {
                    unreachable!("rejected by Engine::new")
                }
            }
        }
        if !input_reached {
            out_l = vec![0.0; dt];
            out_u = vec![0.0; dt];
        }
        let lo = out_l.iter().zip(&c_l).map(|(a, c)| a + c).collect();
        let hi = out_u.iter().zip(&c_u).map(|(a, c)| a + c).collect();
        (lo, hi)
    }

    #[allow(clippy::too_many_arguments)]
    fn scatter(
        &self,
        acc_l: &mut [Option<Vec<f64>>],
        acc_u: &mut [Option<Vec<f64>>],
        q: NodeId,
        indices: &[usize],
        al: &[f64],
        au: &[f64],
        dt: usize,
        dim: usize,
    ) {
        let qd = self.dims[q.index()];
        let mut pl = vec![0.0; dt * qd];
        let mut pu = vec![0.0; dt * qd];
        for (k, &e) in indices.iter().enumerate() {
            for r in 0..dt {
                pl[r * qd + e] += al[r * dim + k];
                pu[r * qd + e] += au[r * dim + k];
            }
        }
        accumulate(acc_l, q, &pl);
        accumulate(acc_u, q, &pu);
    }
}

fn accumulate(acc: &mut [Option<Vec<f64>>], q: NodeId, add: &[f64]) {
    match &mut acc[q.index()] {
        Some(existing) => existing.iter_mut().zip(add).for_each(|(a, b)| *a += b),
        slot @ None => *slot = Some(add.to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, Matrix};

    #[test]
    fn negated_relu_keeps_its_range() {
        // -relu(x) and x - relu(x) on [-1, 1]
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let r = b.relu(x).unwrap();
        let n = b.neg(r).unwrap();
        let d = b.sub(x, r).unwrap();
        let y = b.add(n, d).unwrap();
        let g = b.finish(y).unwrap();
        let bx = Hyperrectangle::uniform(1, -1.0, 1.0).unwrap();
        let bounds = backward_linear_bounds(&g, &bx).unwrap();
        for i in 0..=20 {
            let v = crate::graph::evaluate_flat(&g, &[-1.0 + 0.1 * i as f64]).unwrap()[0];
            assert!(bounds.sink_lower()[0] <= v && v <= bounds.sink_upper()[0]);
        }
        assert_eq!(bounds.lower(n), &[-1.0]);
        assert_eq!(bounds.upper(n), &[0.0]);
    }

    #[test]
    fn affine_two_x_plus_one() {
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let y = b.affine(x, Matrix::new(1, 1, vec![2.0]).unwrap(), vec![1.0]).unwrap();
        let g = b.finish(y).unwrap();
        let region = Hyperrectangle::uniform(1, 0.0, 1.0).unwrap();
        let ibp = interval_bounds(&g, &region).unwrap();
        assert_eq!((ibp.sink_lower(), ibp.sink_upper()), (&[1.0][..], &[3.0][..]));
        assert_eq!(backward_linear_bounds(&g, &region).unwrap(), ibp);
    }

    #[test]
    fn relu_interval() {
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let y = b.relu(x).unwrap();
        let g = b.finish(y).unwrap();
        let ibp = interval_bounds(&g, &Hyperrectangle::uniform(1, -1.0, 2.0).unwrap()).unwrap();
        assert_eq!((ibp.sink_lower(), ibp.sink_upper()), (&[0.0][..], &[2.0][..]));
    }

    #[test]
    fn backward_sees_cancellation() {
        // x - x has interval bounds [-1, 1] on [0, 1]; the linear pass gets 0
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let d = b.sub(x, x).unwrap();
        let g = b.finish(d).unwrap();
        let region = Hyperrectangle::uniform(1, 0.0, 1.0).unwrap();
        assert_eq!(interval_bounds(&g, &region).unwrap().sink_lower(), &[-1.0]);
        let lb = backward_linear_bounds(&g, &region).unwrap();
        assert_eq!((lb.sink_lower(), lb.sink_upper()), (&[0.0][..], &[0.0][..]));
    }

    #[test]
    fn single_relu_dominates_interval() {
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let r = b.relu(x).unwrap();
        let y = b.sub(r, x).unwrap();
        let g = b.finish(y).unwrap();
        let region = Hyperrectangle::uniform(1, -1.0, 1.0).unwrap();
        let ibp = interval_bounds(&g, &region).unwrap();
        let lin = backward_linear_bounds(&g, &region).unwrap();
        assert!(lin.sink_lower()[0] >= ibp.sink_lower()[0]);
        assert!(lin.sink_upper()[0] <= ibp.sink_upper()[0]);
        assert!(lin.sink_upper()[0] < ibp.sink_upper()[0]);
    }

    #[test]
    fn dimension_mismatch() {
        let mut b = GraphBuilder::new();
        let x = b.input(2).unwrap();
        let g = b.finish(x).unwrap();
        let err = interval_bounds(&g, &Hyperrectangle::uniform(3, 0.0, 1.0).unwrap()).unwrap_err();
        assert_eq!(err, VerifyError::Dimension { expected: 2, found: 3 });
    }

    #[test]
    fn phase_clipping_detects_infeasible_regions() {
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let r = b.relu(x).unwrap();
        let g = b.finish(r).unwrap();
        let engine = Engine::new(&g).unwrap();
        let region = Hyperrectangle::uniform(1, 0.5, 1.0).unwrap();
        let mut phases = Phases::new();
        phases.insert((r, 0), Phase::Inactive);
        assert!(engine.bounds(&region, &phases, BoundMethod::Interval).is_none());
        phases.insert((r, 0), Phase::Active);
        assert!(engine.bounds(&region, &phases, BoundMethod::Interval).is_some());
    }
}
