//! Exact decision procedure by activation-pattern enumeration.
//!
//! Piecewise units are branched in topological order; along each branch
//! every node value is an exact rational affine form of the input, and the
//! branch conditions are linear constraints. Fourier–Motzkin elimination
//! prunes infeasible prefixes and minimizes the sink on each full pattern.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::compose::ComposedProblem;
use crate::graph::{Graph, Hyperrectangle, NodeId, NodeKind, TensorShape};

use super::fm::{self, Form};
use super::{Counterexample, Verdict, VerifyError};

pub const DEFAULT_ORACLE_CAP: usize = 20;

/// Exact minimum of a scalar graph over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMinimum {
    pub value: BigRational,
    /// A minimizer (a vertex of its pattern's polytope).
    pub witness: Vec<BigRational>,
    /// Feasible activation patterns visited.
    pub patterns: usize,
}

impl OracleMinimum {
    pub fn value_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }

    pub fn witness_f64(&self) -> Vec<f64> {
        self.witness.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// [`oracle_verify_with`] using [`DEFAULT_ORACLE_CAP`] and tolerance 1e-9.
pub fn oracle_verify(problem: &ComposedProblem) -> Result<Verdict, VerifyError> {
    oracle_verify_with(problem, DEFAULT_ORACLE_CAP, 1e-9)
}

/// Satisfied iff the exact minimum of `N′` over `W` is `>= -tolerance`;
/// otherwise Violated at the minimizing vertex.
pub fn oracle_verify_with(problem: &ComposedProblem, cap: usize, tolerance: f64) -> Result<Verdict, VerifyError> {
    let min = oracle_minimum(&problem.graph, &problem.property.input_box, cap)?;
    let value = min.value_f64();
    if value >= -tolerance {
        return Ok(Verdict::Satisfied { certified_lower_bound: value });
    }
    let mut w = min.witness_f64();
    problem.property.input_box.clamp(&mut w);
    match Counterexample::check(problem, &w, tolerance)? {
        Some(cex) => Ok(Verdict::Violated(cex)),
        None => {
            // rounding the vertex lost the violation; report it anyway
            let values = crate::graph::evaluate_all(&problem.graph, &w)?;
            let (inputs, outputs) = problem.provenance.decode_values(&values);
            Ok(Verdict::Violated(Counterexample {
                witness: w,
                inputs,
                outputs,
                sat_value: values[problem.graph.sink().index()][0],
            }))
        }
    }
}

/// Minimizes a scalar-output graph over `region` exactly.
pub fn oracle_minimum(graph: &Graph, region: &Hyperrectangle, cap: usize) -> Result<OracleMinimum, VerifyError> {
    let units = graph.piecewise_units()?;
    if units > cap {
        return Err(VerifyError::OracleCap { units, cap });
    }
    let d = graph.input_dim()?;
    if region.dim() != d {
        return Err(VerifyError::Dimension { expected: d, found: region.dim() });
    }
    if graph.output_dim()? != 1 {
        return Err(VerifyError::Config("oracle needs a scalar output".into()));
    }
    let mut system = Vec::with_capacity(2 * d);
    for i in 0..d {
        let mut lo = zero_form(d);
        lo[i] = one();
        lo[d] = -rat(region.lower()[i]);
        let mut hi = zero_form(d);
        hi[i] = -one();
        hi[d] = rat(region.upper()[i]);
        system.push(lo);
        system.push(hi);
    }
    let lo: Vec<BigRational> = region.lower().iter().map(|&x| rat(x)).collect();
    let hi: Vec<BigRational> = region.upper().iter().map(|&x| rat(x)).collect();
    let mut search = Search {
        graph,
        order: graph.topological_order()?.to_vec(),
        shapes: graph.ids().map(|id| graph.shape(id).cloned()).collect::<Result<_, _>>()?,
        d,
        lo,
        hi,
        values: vec![Vec::new(); graph.len()],
        best: None,
        patterns: 0,
    };
    search.node(0, &mut system);
    let (value, witness) = search.best.expect("the box is non-empty, so some pattern is feasible");
    Ok(OracleMinimum { value, witness, patterns: search.patterns })
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn one() -> BigRational {
    BigRational::from_integer(1.into())
}

fn zero_form(d: usize) -> Form {
    vec![BigRational::zero(); d + 1]
}

fn constant(d: usize, c: BigRational) -> Form {
    let mut f = zero_form(d);
    f[d] = c;
    f
}

fn sub(a: &Form, b: &Form) -> Form {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

struct Search<'g> {
    graph: &'g Graph,
    order: Vec<NodeId>,
    shapes: Vec<TensorShape>,
    d: usize,
    lo: Vec<BigRational>,
    hi: Vec<BigRational>,
    values: Vec<Vec<Form>>,
    best: Option<(BigRational, Vec<BigRational>)>,
    patterns: usize,
}

impl Search<'_> {
    /// Range of an affine form over the box.
    fn box_range(&self, f: &Form) -> (BigRational, BigRational) {
        let mut lo = f[self.d].clone();
        let mut hi = f[self.d].clone();
        for i in 0..self.d {
            let a = &f[i];
            if a.is_positive() {
                lo += a * &self.lo[i];
                hi += a * &self.hi[i];
            } else if a.is_negative() {
                lo += a * &self.hi[i];
                hi += a * &self.lo[i];
            }
        }
        (lo, hi)
    }

    fn node(&mut self, pos: usize, system: &mut Vec<Form>) {
        if pos == self.order.len() {
            self.leaf(system);
            return;
        }
        let id = self.order[pos];
        let node = &self.graph.nodes()[id.index()];
        let d = self.d;
        let pv = |k: usize| &self.values[node.preds[k].index()];
        let out: Vec<Form> = match &node.kind {
            NodeKind::Input(_) => (0..d)
                .map(|i| {
                    let mut f = zero_form(d);
                    f[i] = one();
                    f
                })
                .collect(),
            NodeKind::Parameter(_, values) => values.iter().map(|&v| constant(d, rat(v))).collect(),
            NodeKind::Affine { weight, bias } => {
                let x = pv(0);
                (0..weight.rows())
                    .map(|i| {
                        let mut f = constant(d, rat(bias[i]));
                        for (j, &w) in weight.row(i).iter().enumerate() {
                            if w != 0.0 {
                                let w = rat(w);
                                for (a, b) in f.iter_mut().zip(&x[j]) {
                                    *a += &w * b;
                                }
                            }
                        }
                        f
                    })
                    .collect()
            }
            NodeKind::Add => pv(0).iter().zip(pv(1)).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect(),
            NodeKind::Subtract => pv(0).iter().zip(pv(1)).map(|(a, b)| sub(a, b)).collect(),
            NodeKind::Negate => pv(0).iter().map(|a| a.iter().map(|x| -x).collect()).collect(),
            NodeKind::ScaleConst(s) => {
                let s = rat(*s);
                pv(0).iter().map(|a| a.iter().map(|x| x * &s).collect()).collect()
            }
            NodeKind::Concat(axis) => {
                let parts: Vec<&[Form]> = node.preds.iter().map(|q| self.values[q.index()].as_slice()).collect();
                let shapes: Vec<&TensorShape> = node.preds.iter().map(|q| &self.shapes[q.index()]).collect();
                crate::graph::eval_concat(&parts, &shapes, &self.shapes[id.index()], *axis)
            }
            NodeKind::Slice { start, end } => pv(0)[*start..*end].to_vec(),
            NodeKind::SelectIndices(indices) => indices.iter().map(|&i| pv(0)[i].clone()).collect(),
            NodeKind::Relu
            | NodeKind::MaxPairwise
            | NodeKind::MinPairwise
            | NodeKind::ClampConst { .. }
            | NodeKind::ReduceMax => {
                let mut partial = Vec::new();
                self.branch(pos, 0, &mut partial, system);
                return;
            }
        };
        self.values[id.index()] = out;
        self.node(pos + 1, system);
        self.values[id.index()] = Vec::new();
    }

    /// Pieces of element `k` of a piecewise node: `(value, conditions)`.
    fn pieces(&self, id: NodeId, k: usize) -> Vec<(Form, Vec<Form>)> {
        let node = &self.graph.nodes()[id.index()];
        let d = self.d;
        let pv = |j: usize| &self.values[node.preds[j].index()];
        match &node.kind {
            NodeKind::Relu => {
                let z = &pv(0)[k];
                let neg: Form = z.iter().map(|x| -x).collect();
                vec![(z.clone(), vec![z.clone()]), (zero_form(d), vec![neg])]
            }
            NodeKind::MaxPairwise | NodeKind::MinPairwise => {
                let (a, b) = (&pv(0)[k], &pv(1)[k]);
                let a_ge_b = sub(a, b);
                let b_ge_a = sub(b, a);
                if node.kind == NodeKind::MaxPairwise {
                    vec![(a.clone(), vec![a_ge_b]), (b.clone(), vec![b_ge_a])]
                } else {
                    vec![(a.clone(), vec![b_ge_a]), (b.clone(), vec![a_ge_b])]
                }
            }
            NodeKind::ClampConst { lo, hi } => {
                let x = &pv(0)[k];
                let l = constant(d, rat(lo[k]));
                let h = constant(d, rat(hi[k]));
                vec![
                    (l.clone(), vec![sub(&l, x)]),
                    (x.clone(), vec![sub(x, &l), sub(&h, x)]),
                    (h.clone(), vec![sub(x, &h)]),
                ]
            }
            NodeKind::ReduceMax => {
                let x = pv(0);
                (0..x.len())
                    .map(|j| {
                        let conds = (0..x.len()).filter(|&i| i != j).map(|i| sub(&x[j], &x[i])).collect();
                        (x[j].clone(), conds)
                    })
                    .collect()
            }
            _ => unreachable!("not piecewise"),
        }
    }

    fn branch(&mut self, pos: usize, k: usize, partial: &mut Vec<Form>, system: &mut Vec<Form>) {
        let id = self.order[pos];
        if k == self.shapes[id.index()].numel() {
            self.values[id.index()] = std::mem::take(partial);
            self.node(pos + 1, system);
            *partial = std::mem::take(&mut self.values[id.index()]);
            return;
        }
        for (value, conds) in self.pieces(id, k) {
            // conditions decided on the whole box need no constraint
            let mut added = 0;
            let mut dead = false;
            for c in conds {
                let (lo, hi) = self.box_range(&c);
                if lo >= BigRational::zero() {
                    continue;
                }
                if hi.is_negative() {
                    dead = true;
                    break;
                }
                system.push(c);
                added += 1;
            }
            if !dead && (added == 0 || fm::feasible(system, self.d)) {
                partial.push(value);
                self.branch(pos, k + 1, partial, system);
                partial.pop();
            }
            system.truncate(system.len() - added);
        }
    }

    fn leaf(&mut self, system: &[Form]) {
        let sink = &self.values[self.graph.sink().index()][0];
        if let Some((value, point)) = fm::minimize(system, sink, self.d) {
            self.patterns += 1;
            if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
                self.best = Some((value, point));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, Matrix};

    fn r(n: i64, den: i64) -> BigRational {
        BigRational::new(n.into(), den.into())
    }

    #[test]
    fn affine_minimum_at_vertex() {
        let mut b = GraphBuilder::new();
        let x = b.input(2).unwrap();
        let y = b.affine(x, Matrix::new(1, 2, vec![1.0, -2.0]).unwrap(), vec![0.5]).unwrap();
        let g = b.finish(y).unwrap();
        let m = oracle_minimum(&g, &Hyperrectangle::uniform(2, 0.0, 1.0).unwrap(), 20).unwrap();
        assert_eq!(m.value, r(-3, 2));
        assert_eq!(m.witness, vec![r(0, 1), r(1, 1)]);
        assert_eq!(m.patterns, 1);
    }

    #[test]
    fn single_relu_two_patterns() {
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let r1 = b.relu(x).unwrap();
        let h = b.scale(x, 0.5).unwrap();
        let y = b.sub(h, r1).unwrap();
        let g = b.finish(y).unwrap();
        // x/2 - relu(x): x/2 on [-1,0] (min -1/2), -x/2 on [0,1] (min -1/2)
        let m = oracle_minimum(&g, &Hyperrectangle::uniform(1, -1.0, 1.0).unwrap(), 20).unwrap();
        assert_eq!(m.patterns, 2);
        assert_eq!(m.value, r(-1, 2));
    }

    #[test]
    fn refuses_above_cap() {
        let mut b = GraphBuilder::new();
        let x = b.input(3).unwrap();
        let r1 = b.relu(x).unwrap();
        let s = b.reduce_max(r1).unwrap();
        let g = b.finish(s).unwrap();
        let err = oracle_minimum(&g, &Hyperrectangle::uniform(3, 0.0, 1.0).unwrap(), 4).unwrap_err();
        assert_eq!(err, VerifyError::OracleCap { units: 5, cap: 4 });
    }

    #[test]
    fn native_piecewise_kinds() {
        // max(clamp(x, 0, 1), 1 - x) on [-1, 2]: minimum 1/2 at x = 1/2
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let c = b.clamp(x, vec![0.0], vec![1.0]).unwrap();
        let o = b.affine(x, Matrix::new(1, 1, vec![-1.0]).unwrap(), vec![1.0]).unwrap();
        let m = b.max_node(c, o).unwrap();
        let g = b.finish(m).unwrap();
        let min = oracle_minimum(&g, &Hyperrectangle::uniform(1, -1.0, 2.0).unwrap(), 20).unwrap();
        assert_eq!(min.value, r(1, 2));
        assert_eq!(min.witness, vec![r(1, 2)]);
    }
}
