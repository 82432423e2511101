//! Self-composition: turns a hyperproperty of one network into a plain
//! reachability property of a bigger graph.
//!
//! The composed graph `N′: W -> R` runs `N_in`, feeds each generated point
//! to its own copy of the network, and hands `(x⁽¹⁾‖…‖x⁽ᵛ⁾‖y⁽¹⁾‖…‖y⁽ᵛ⁾)` to
//! `N_sat`. The network satisfies the hyperproperty iff `N′(w) >= 0` for
//! every `w` in `W`.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{evaluate_all, evaluate_flat, EvalError, Graph, GraphBuilder, GraphError, Hyperrectangle, NodeId, NodeKind};
use crate::specs::{Nndh, SpecKind};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ComposeError {
    #[error("{interface}: network has dimension {found}, spec expects {expected}")]
    Dimension {
        interface: &'static str,
        found: usize,
        expected: usize,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A reachability property: every point of `input_box` must map to a
/// non-negative scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub input_box: Hyperrectangle,
}

/// Where a node of the composed graph came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// The composed graph's input `w`.
    Input,
    /// Node of the generator network `N_in`.
    Generator(NodeId),
    /// Node of copy `copy` (0-based) of the network under verification.
    Copy { copy: usize, node: NodeId },
    /// Slicing and concatenation between the stages.
    Glue,
    /// Node of the satisfaction network.
    Satisfaction(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// One entry per composed node.
    pub origins: Vec<Origin>,
    /// Composed node holding `(x⁽¹⁾‖…‖x⁽ᵛ⁾)`.
    pub generated: NodeId,
    /// Composed node holding `y⁽ᵏ⁾` for each copy.
    pub copy_outputs: Vec<NodeId>,
    pub copies: usize,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl Provenance {
    /// Splits a full evaluation of the composed graph into the generated
    /// inputs and the outputs of every copy.
    pub fn decode_values(&self, values: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let xs = values[self.generated.index()]
            .chunks(self.input_dim)
            .map(<[f64]>::to_vec)
            .collect();
        let ys = self
            .copy_outputs
            .iter()
            .map(|id| values[id.index()].clone())
            .collect();
        (xs, ys)
    }
}

#[derive(Debug, Clone)]
pub struct ComposedProblem {
    pub graph: Graph,
    pub property: Property,
    pub provenance: Provenance,
    pub spec_kind: Option<SpecKind>,
}

impl ComposedProblem {
    pub fn evaluate(&self, w: &[f64]) -> Result<f64, EvalError> {
        Ok(evaluate_flat(&self.graph, w)?[0])
    }

    /// `(x⁽¹⁾..x⁽ᵛ⁾, y⁽¹⁾..y⁽ᵛ⁾)` for the point `w`.
    pub fn decode(&self, w: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), EvalError> {
        let values = evaluate_all(&self.graph, w)?;
        Ok(self.provenance.decode_values(&values))
    }
}

/// Builds `N′` for `network` and `spec`.
pub fn self_compose(network: &Graph, spec: &Nndh) -> Result<ComposedProblem, ComposeError> {
    let n = spec.input_dim();
    let m = spec.output_dim();
    let v = spec.copies();
    let net_in = network.input_dim()?;
    if net_in != n {
        return Err(ComposeError::Dimension { interface: "network input", found: net_in, expected: n });
    }
    let net_out = network.output_dim()?;
    if net_out != m {
        return Err(ComposeError::Dimension { interface: "network output", found: net_out, expected: m });
    }

    let mut b = GraphBuilder::new();
    let mut origins = Vec::new();
    let w = b.input(spec.w_box().dim())?;
    origins.push(Origin::Input);

    let generator = b.inline(spec.n_in(), w)?;
    record(&mut origins, &b, &generator, Origin::Generator);
    let generated = generator[spec.n_in().sink().index()];

    let mut shared = HashMap::new();
    let mut copy_outputs = Vec::with_capacity(v);
    for copy in 0..v {
        let x = b.slice(generated, copy * n, (copy + 1) * n)?;
        origins.push(Origin::Glue);
        let mapping = b.inline_sharing(network, x, &shared)?;
        record(&mut origins, &b, &mapping, |node| Origin::Copy { copy, node });
        if copy == 0 {
            for id in network.ids() {
                if matches!(network.nodes()[id.index()].kind, NodeKind::Parameter(..)) {
                    shared.insert(id, mapping[id.index()]);
                }
            }
        }
        let mut y = mapping[network.sink().index()];
        if b.shape(y)?.rank() != 1 {
            y = b.slice(y, 0, m)?;
            origins.push(Origin::Glue);
        }
        copy_outputs.push(y);
    }

    let mut parts = vec![generated];
    parts.extend(&copy_outputs);
    let sat_input = b.concat(&parts)?;
    origins.push(Origin::Glue);
    let satisfaction = b.inline(spec.n_sat(), sat_input)?;
    record(&mut origins, &b, &satisfaction, Origin::Satisfaction);
    let sink = satisfaction[spec.n_sat().sink().index()];

    debug_assert_eq!(origins.len(), b.len());
    let graph = b.finish(sink)?;
    Ok(ComposedProblem {
        graph,
        property: Property { input_box: spec.w_box().clone() },
        provenance: Provenance {
            origins,
            generated,
            copy_outputs,
            copies: v,
            input_dim: n,
            output_dim: m,
        },
        spec_kind: Some(spec.kind()),
    })
}

/// Appends origins for the nodes an inline call created, in id order.
fn record(
    origins: &mut Vec<Origin>,
    b: &GraphBuilder,
    mapping: &[NodeId],
    origin: impl Fn(NodeId) -> Origin,
) {
    let start = origins.len();
    let mut fresh: Vec<(NodeId, NodeId)> = mapping
        .iter()
        .enumerate()
        .filter(|(_, new)| new.index() >= start && new.index() < b.len())
        .map(|(old, new)| (*new, NodeId(old)))
        .collect();
    fresh.sort();
    for (new, old) in fresh {
        // flattening slices inserted by inline map to the input node
        while origins.len() < new.index() {
            origins.push(Origin::Glue);
        }
        origins.push(origin(old));
    }
    while origins.len() < b.len() {
        origins.push(Origin::Glue);
    }
}

/// `N_sat(N_in(w), N(x⁽¹⁾), …, N(x⁽ᵛ⁾))` evaluated stage by stage on the
/// separate graphs.
pub fn staged_evaluate(network: &Graph, spec: &Nndh, w: &[f64]) -> Result<StagedValues, EvalError> {
    let generated = evaluate_flat(spec.n_in(), w)?;
    let xs: Vec<Vec<f64>> = generated.chunks(spec.input_dim()).map(<[f64]>::to_vec).collect();
    let ys = xs
        .iter()
        .map(|x| evaluate_flat(network, x))
        .collect::<Result<Vec<_>, _>>()?;
    let mut u = generated;
    for y in &ys {
        u.extend_from_slice(y);
    }
    let sat = evaluate_flat(spec.n_sat(), &u)?[0];
    Ok(StagedValues { xs, ys, sat })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagedValues {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub sat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disagreement {
    pub w: Vec<f64>,
    pub sat_value: f64,
    pub in_output_set: bool,
}

/// Outcome of [`satisfaction_equivalence_check`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EquivalenceReport {
    pub samples: usize,
    /// Samples where `N′(w) < 0`.
    pub violations: usize,
    /// Samples with `|N′(w)| <= tolerance`, where rounding decides the sign.
    pub boundary: usize,
    pub disagreements: Vec<Disagreement>,
}

/// Samples `W` and checks that `N′(w) < 0` holds exactly when the decoded
/// tuple falls outside the spec's output set.
pub fn satisfaction_equivalence_check(
    network: &Graph,
    spec: &Nndh,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<EquivalenceReport, ComposeError> {
    let problem = self_compose(network, spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EquivalenceReport { samples, ..Default::default() };
    for _ in 0..samples {
        let w = spec.w_box().sample(&mut rng);
        let values = evaluate_all(&problem.graph, &w)?;
        let sat_value = values[problem.graph.sink().index()][0];
        let (xs, ys) = problem.provenance.decode_values(&values);
        let in_output_set = spec.output_set_contains(&xs, &ys);
        if sat_value < 0.0 {
            report.violations += 1;
        }
        if sat_value.abs() <= tolerance {
            report.boundary += 1;
            continue;
        }
        if (sat_value >= 0.0) != in_output_set {
            report.disagreements.push(Disagreement { w, sat_value, in_output_set });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Matrix;
    use crate::specs::{build_global_robustness_katz, build_monotonicity, SpecParams};

    fn scalar_net(w: f64, c: f64) -> Graph {
        let mut b = GraphBuilder::new();
        let x = b.input(1).unwrap();
        let y = b.affine(x, Matrix::new(1, 1, vec![w]).unwrap(), vec![c]).unwrap();
        b.finish(y).unwrap()
    }

    fn unit() -> Hyperrectangle {
        Hyperrectangle::uniform(1, 0.0, 1.0).unwrap()
    }

    #[test]
    fn identity_monotonicity_by_hand() {
        let spec = build_monotonicity(&SpecParams::new(unit(), 1)).unwrap();
        let p = self_compose(&scalar_net(1.0, 0.0), &spec).unwrap();
        assert_eq!(p.evaluate(&[0.2, 0.7]).unwrap(), 0.2 - 0.7);
        let (xs, ys) = p.decode(&[0.7, 0.2]).unwrap();
        assert_eq!(xs, vec![vec![0.2], vec![0.7]]);
        assert_eq!(ys, vec![vec![0.2], vec![0.7]]);
    }

    #[test]
    fn constant_network_is_robust_everywhere() {
        let spec =
            build_global_robustness_katz(&SpecParams::new(unit(), 1).with_robustness(0.1, 0.05)).unwrap();
        let p = self_compose(&scalar_net(0.0, 3.0), &spec).unwrap();
        for w in [[0.0, -0.1], [0.5, 0.0], [1.0, 0.1]] {
            assert_eq!(p.evaluate(&w).unwrap(), 0.05);
        }
        let report = satisfaction_equivalence_check(&scalar_net(0.0, 3.0), &spec, 200, 1, 1e-12).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.disagreements.is_empty());
    }

    #[test]
    fn dimension_mismatch_names_interface() {
        let spec = build_monotonicity(&SpecParams::new(unit(), 2)).unwrap();
        let err = self_compose(&scalar_net(1.0, 0.0), &spec).unwrap_err();
        assert!(matches!(err, ComposeError::Dimension { interface: "network output", .. }));
    }

    #[test]
    fn provenance_covers_every_node() {
        let spec = build_monotonicity(&SpecParams::new(unit(), 1)).unwrap();
        let net = scalar_net(-1.0, 0.0);
        let p = self_compose(&net, &spec).unwrap();
        assert_eq!(p.provenance.origins.len(), p.graph.len());
        let copies: usize = p
            .provenance
            .origins
            .iter()
            .filter(|o| matches!(o, Origin::Copy { .. }))
            .count();
        // the network's affine node, once per copy
        assert_eq!(copies, 2);
    }
}
