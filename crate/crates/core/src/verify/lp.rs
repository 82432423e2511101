//! LP lower bound of a region: every node is an affine form in the input
//! and one relaxed variable per unstable ReLU (triangle relaxation). With no
//! unstable ReLU the LP is the exact minimum over the region.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::graph::{Hyperrectangle, NodeKind};

use super::bounds::{Engine, Phase, Phases, RegionBounds};

pub(crate) enum LpOutcome {
    Infeasible,
    Bound { value: f64, minimizer: Vec<f64> },
    /// The solver failed; the caller keeps its other bounds.
    Failed,
}

pub(crate) fn solve_region(
    engine: &Engine<'_>,
    region: &Hyperrectangle,
    phases: &Phases,
    rb: &RegionBounds,
    slack: f64,
) -> LpOutcome {
    let graph = engine.graph;
    let d = region.dim();
    let unstable = rb.unstable();
    let nvars = d + unstable.len();
    // forms have one coefficient per variable, then the constant
    let width = nvars + 1;
    let unit_var = |unit| unstable.iter().position(|(u, _)| *u == unit).map(|p| d + p);

    // constraints `form >= 0`
    let mut constraints: Vec<Vec<f64>> = Vec::new();

    let mut forms: Vec<Vec<Vec<f64>>> = vec![Vec::new(); graph.len()];
    for &id in &engine.order {
        let node = &graph.nodes()[id.index()];
        let pred = |k: usize| &forms[node.preds[k].index()];
        let constant = |v: f64| {
            let mut f = vec![0.0; width];
            f[nvars] = v;
            f
        };
        let out: Vec<Vec<f64>> = match &node.kind {
            NodeKind::Input(_) => (0..d)
                .map(|i| {
                    let mut f = vec![0.0; width];
                    f[i] = 1.0;
                    f
                })
                .collect(),
            NodeKind::Parameter(_, values) => values.iter().map(|&v| constant(v)).collect(),
            NodeKind::Affine { weight, bias } => {
                let x = pred(0);
                (0..weight.rows())
                    .map(|i| {
                        let mut f = constant(bias[i]);
                        for (j, &w) in weight.row(i).iter().enumerate() {
                            if w != 0.0 {
                                axpy(&mut f, w, &x[j]);
                            }
                        }
                        f
                    })
                    .collect()
            }
            NodeKind::Relu => {
                let (l, u) = rb.pre[id.index()].as_ref().expect("relu bounds");
                let z = pred(0);
                (0..z.len())
                    .map(|k| {
                        let fixed = phases.get(&(id, k));
                        if let Some(v) = unit_var((id, k)) {
                            let mut r = vec![0.0; width];
                            r[v] = 1.0;
                            // r >= z
                            let mut c = r.clone();
                            axpy(&mut c, -1.0, &z[k]);
                            constraints.push(c);
                            // r <= s (z - l)
                            let s = u[k] / (u[k] - l[k]);
                            let mut c = vec![0.0; width];
                            axpy(&mut c, s, &z[k]);
                            c[nvars] -= s * l[k];
                            c[v] -= 1.0;
                            constraints.push(c);
                            r
                        } else if l[k] >= 0.0 {
                            if fixed == Some(&Phase::Active) {
                                let mut c = z[k].clone();
                                c[nvars] += slack;
                                constraints.push(c);
                            }
                            z[k].clone()
                        } else {
                            if fixed == Some(&Phase::Inactive) {
                                let mut c = vec![0.0; width];
                                axpy(&mut c, -1.0, &z[k]);
                                c[nvars] += slack;
                                constraints.push(c);
                            }
                            constant(0.0)
                        }
                    })
                    .collect()
            }
            NodeKind::Add => combine(pred(0), pred(1), 1.0),
            NodeKind::Subtract => combine(pred(0), pred(1), -1.0),
            NodeKind::Negate => pred(0).iter().map(|f| f.iter().map(|x| -x).collect()).collect(),
            NodeKind::ScaleConst(s) => pred(0).iter().map(|f| f.iter().map(|x| s * x).collect()).collect(),
            NodeKind::Concat(axis) => {
                let parts: Vec<&[Vec<f64>]> = node.preds.iter().map(|q| forms[q.index()].as_slice()).collect();
                let shapes: Vec<_> = node.preds.iter().map(|q| graph.shape(*q).expect("valid")).collect();
                crate::graph::eval_concat(&parts, &shapes, graph.shape(id).expect("valid"), *axis)
            }
            NodeKind::Slice { start, end } => pred(0)[*start..*end].to_vec(),
            NodeKind::SelectIndices(indices) => indices.iter().map(|&i| pred(0)[i].clone()).collect(),
            NodeKind::MaxPairwise | NodeKind::MinPairwise | NodeKind::ClampConst { .. } | NodeKind::ReduceMax => {
                unreachable!("engine graphs are lowered")
            }
        };
        forms[id.index()] = out;
    }

    let objective = &forms[graph.sink().index()][0];
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut vars: Vec<Variable> = Vec::with_capacity(nvars);
    for i in 0..d {
        vars.push(lp.add_var(objective[i], (region.lower()[i], region.upper()[i])));
    }
    for (p, ((id, k), _)) in unstable.iter().enumerate() {
        let (_, u) = rb.pre[id.index()].as_ref().expect("relu bounds");
        vars.push(lp.add_var(objective[d + p], (0.0, u[*k])));
    }
    for c in &constraints {
        let terms: Vec<(Variable, f64)> =
            (0..nvars).filter(|&i| c[i] != 0.0).map(|i| (vars[i], c[i])).collect();
        if terms.is_empty() {
            if c[nvars] < 0.0 {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        lp.add_constraint(terms, ComparisonOp::Ge, -c[nvars]);
    }
    match lp.solve() {
        Ok(solution) => {
            let minimizer: Vec<f64> = (0..d)
                .map(|i| solution[vars[i]].clamp(region.lower()[i], region.upper()[i]))
                .collect();
            LpOutcome::Bound { value: solution.objective() + objective[nvars], minimizer }
        }
        Err(minilp::Error::Infeasible) => LpOutcome::Infeasible,
        Err(minilp::Error::Unbounded) => LpOutcome::Failed,
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn combine(a: &[Vec<f64>], b: &[Vec<f64>], sign: f64) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(fa, fb)| fa.iter().zip(fb).map(|(x, y)| x + sign * y).collect())
        .collect()
}
