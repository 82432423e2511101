//! Global specifications expressed as neural-network-defined hyperproperties.
//!
//! An [`Nndh`] bundles a box `W`, a generator network `N_in: W -> (R^n)^v`
//! and a satisfaction network `N_sat` that is non-negative exactly on the
//! admissible `(x⁽¹⁾..x⁽ᵛ⁾, y⁽¹⁾..y⁽ᵛ⁾)` tuples. The builders here produce
//! the five standard global specifications; [`compile_dnf`] turns
//! comparison formulas into satisfaction networks.

mod builders;
mod description;
mod dnf;

pub use builders::{
    build, build_dependency_fairness, build_global_robustness_extra_class,
    build_global_robustness_katz, build_lipschitz, build_monotonicity,
};
pub use description::SpecDescription;
pub use dnf::{compile_dnf, Atom, DnfFormula};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, Hyperrectangle};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpecError {
    #[error("invalid spec parameters: {0}")]
    InvalidParams(String),
    #[error("invalid formula: {0}")]
    InvalidFormula(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Output may not increase when the input increases.
    #[default]
    NonIncreasing,
    NonDecreasing,
}

/// Which global specification an [`Nndh`] encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    Monotonicity,
    RobustnessKatz,
    RobustnessExtraClass,
    Lipschitz,
    DependencyFairness,
}

impl SpecKind {
    pub const ALL: [SpecKind; 5] = [
        SpecKind::Monotonicity,
        SpecKind::RobustnessKatz,
        SpecKind::RobustnessExtraClass,
        SpecKind::Lipschitz,
        SpecKind::DependencyFairness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpecKind::Monotonicity => "monotonicity",
            SpecKind::RobustnessKatz => "robustness_katz",
            SpecKind::RobustnessExtraClass => "robustness_extra_class",
            SpecKind::Lipschitz => "lipschitz",
            SpecKind::DependencyFairness => "dependency_fairness",
        }
    }
}

/// Parameters shared by the builders. Indices are zero-based; each builder
/// reads only the fields it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecParams {
    /// The input domain `X` of the network under verification.
    pub domain: Hyperrectangle,
    /// Number of outputs of the network under verification (for the
    /// extra-class robustness spec this includes the rejection class, which
    /// is the last output).
    pub output_dim: usize,
    pub input_index: usize,
    pub output_index: usize,
    pub direction: Direction,
    /// Radius of the L∞ ball.
    pub delta: f64,
    /// Permitted change of the output.
    pub epsilon: f64,
    /// Lipschitz constant.
    pub lipschitz: f64,
    /// Number of values of the sensitive attribute.
    pub attribute_values: usize,
    pub sensitive_index: usize,
}

impl SpecParams {
    pub fn new(domain: Hyperrectangle, output_dim: usize) -> Self {
        SpecParams {
            domain,
            output_dim,
            input_index: 0,
            output_index: 0,
            direction: Direction::NonIncreasing,
            delta: 0.0,
            epsilon: 0.0,
            lipschitz: 0.0,
            attribute_values: 0,
            sensitive_index: 0,
        }
    }

    pub fn with_monotone(mut self, input_index: usize, output_index: usize, direction: Direction) -> Self {
        self.input_index = input_index;
        self.output_index = output_index;
        self.direction = direction;
        self
    }

    pub fn with_robustness(mut self, delta: f64, epsilon: f64) -> Self {
        self.delta = delta;
        self.epsilon = epsilon;
        self
    }

    pub fn with_lipschitz(mut self, constant: f64) -> Self {
        self.lipschitz = constant;
        self
    }

    pub fn with_fairness(mut self, attribute_values: usize, sensitive_index: usize) -> Self {
        self.attribute_values = attribute_values;
        self.sensitive_index = sensitive_index;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.domain.dim()
    }
}

/// A neural-network-defined hyperproperty.
#[derive(Debug, Clone)]
pub struct Nndh {
    kind: SpecKind,
    params: SpecParams,
    w_box: Hyperrectangle,
    n_in: Graph,
    n_sat: Graph,
    copies: usize,
    input_dim: usize,
    output_dim: usize,
}

impl Nndh {
    /// Checks the interface dimensions of `n_in` and `n_sat` against
    /// `w_box`, `copies`, and the network's input and output dimensions.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: SpecKind,
        params: SpecParams,
        w_box: Hyperrectangle,
        n_in: Graph,
        n_sat: Graph,
        copies: usize,
        input_dim: usize,
        output_dim: usize,
    ) -> Result<Self, SpecError> {
        let check = |what: &str, found: usize, expected: usize| {
            if found == expected {
                Ok(())
            } else {
                Err(SpecError::InvalidParams(format!(
                    "{what} has dimension {found}, expected {expected}"
                )))
            }
        };
        if copies == 0 || input_dim == 0 || output_dim == 0 {
            return Err(SpecError::InvalidParams("dimensions must be positive".into()));
        }
        check("N_in input", n_in.input_dim()?, w_box.dim())?;
        check("N_in output", n_in.output_dim()?, copies * input_dim)?;
        check("N_sat input", n_sat.input_dim()?, copies * (input_dim + output_dim))?;
        check("N_sat output", n_sat.output_dim()?, 1)?;
        Ok(Nndh {
            kind,
            params,
            w_box,
            n_in,
            n_sat,
            copies,
            input_dim,
            output_dim,
        })
    }

    pub fn kind(&self) -> SpecKind {
        self.kind
    }

    pub fn params(&self) -> &SpecParams {
        &self.params
    }

    pub fn w_box(&self) -> &Hyperrectangle {
        &self.w_box
    }

    pub fn n_in(&self) -> &Graph {
        &self.n_in
    }

    pub fn n_sat(&self) -> &Graph {
        &self.n_sat
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Membership of a generated tuple in the spec's input set, up to `tol`
    /// on the metric conditions.
    pub fn input_set_contains(&self, xs: &[Vec<f64>], tol: f64) -> bool {
        let p = &self.params;
        let in_domain = xs.iter().all(|x| {
            x.iter()
                .zip(p.domain.lower().iter().zip(p.domain.upper()))
                .all(|(v, (lo, hi))| *lo - tol <= *v && *v <= *hi + tol)
        });
        match self.kind {
            SpecKind::Monotonicity => {
                let i = p.input_index;
                in_domain && xs[1][i] >= xs[0][i]
            }
            SpecKind::RobustnessKatz | SpecKind::RobustnessExtraClass => {
                in_domain && linf_distance(&xs[0], &xs[1]) <= p.delta + tol
            }
            SpecKind::Lipschitz => in_domain,
            SpecKind::DependencyFairness => xs.iter().enumerate().all(|(k, x)| {
                x[p.sensitive_index] == (k + 1) as f64
                    && (0..self.input_dim)
                        .all(|i| i == p.sensitive_index || x[i] == xs[0][i])
            }),
        }
    }

    /// Direct evaluation of the spec's output-set predicate.
    pub fn output_set_contains(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> bool {
        let p = &self.params;
        match self.kind {
            SpecKind::Monotonicity => {
                let j = p.output_index;
                match p.direction {
                    Direction::NonIncreasing => ys[1][j] <= ys[0][j],
                    Direction::NonDecreasing => ys[1][j] >= ys[0][j],
                }
            }
            SpecKind::RobustnessKatz => linf_distance(&ys[0], &ys[1]) <= p.epsilon,
            SpecKind::RobustnessExtraClass => {
                let m = self.output_dim - 1;
                let not_robust = |y: &[f64]| (0..m).all(|j| y[m] >= y[j]);
                not_robust(&ys[0]) || not_robust(&ys[1]) || same_top_class(&ys[..2], m)
            }
            SpecKind::Lipschitz => {
                linf_distance(&ys[0], &ys[1]) <= p.lipschitz * linf_distance(&xs[0], &xs[1])
            }
            SpecKind::DependencyFairness => same_top_class(ys, self.output_dim),
        }
    }
}

/// Some class `j < classes` is maximal among the first `classes` entries
/// of every vector.
fn same_top_class(ys: &[Vec<f64>], classes: usize) -> bool {
    (0..classes).any(|j1| ys.iter().all(|y| (0..classes).all(|j2| y[j1] >= y[j2])))
}

pub(crate) fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
