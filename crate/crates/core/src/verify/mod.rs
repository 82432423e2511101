//! Deciding `∀ w ∈ W. N′(w) >= 0` for composed problems.
//!
//! [`verify`] runs best-first branch-and-bound over the input box with
//! interval or backward linear bounds, exact LP solves on regions with few
//! unstable ReLUs, and concrete falsification. [`oracle_verify`] is an
//! independent exact procedure for small instances used to cross-check it.

mod bab;
mod bounds;
mod falsify;
mod fm;
mod lp;
mod oracle;

pub use bab::verify;
pub use bounds::{backward_linear_bounds, interval_bounds, Bounds};
pub use falsify::falsify;
pub use oracle::{oracle_minimum, oracle_verify, oracle_verify_with, OracleMinimum, DEFAULT_ORACLE_CAP};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::compose::ComposedProblem;
use crate::graph::{EvalError, GraphError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VerifyError {
    #[error("invalid verifier configuration: {0}")]
    Config(String),
    #[error("box has dimension {found}, graph input has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("composed graph has {units} piecewise units, above the oracle cap of {cap}; use verify instead")]
    OracleCap { units: usize, cap: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Interval,
    #[default]
    BackwardLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    /// Bisect the widest non-degenerate input coordinate.
    #[default]
    LongestEdge,
    /// Bisect the coordinate whose worse half has the best lower bound.
    BestImprovement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// Regions with lower bound `>= -tolerance` are certified; witnesses
    /// must evaluate below `-tolerance`.
    pub tolerance: f64,
    pub max_regions: usize,
    pub max_time: Duration,
    pub split_strategy: SplitStrategy,
    /// Evaluations spent by the up-front falsification pass.
    pub falsify_samples: usize,
    pub bound_method: BoundMethod,
    pub workers: usize,
    pub seed: u64,
    /// Regions with at most this many unstable ReLUs are bounded by an LP
    /// over the triangle relaxation and split on ReLUs rather than inputs.
    pub lp_max_unstable: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            tolerance: 1e-9,
            max_regions: 200_000,
            max_time: Duration::from_secs(300),
            split_strategy: SplitStrategy::LongestEdge,
            falsify_samples: 1000,
            bound_method: BoundMethod::BackwardLinear,
            workers: 1,
            seed: 0,
            lp_max_unstable: 12,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<(), VerifyError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(VerifyError::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_regions == 0 {
            return Err(VerifyError::Config("max_regions must be at least 1".into()));
        }
        if self.max_time.is_zero() {
            return Err(VerifyError::Config("max_time must be positive".into()));
        }
        if self.falsify_samples == 0 {
            return Err(VerifyError::Config("falsify_samples must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(VerifyError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Partial configuration, as read from a spec file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_regions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_strategy: Option<SplitStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub falsify_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_method: Option<BoundMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ConfigOverrides {
    pub fn apply(&self, config: &mut VerifyConfig) {
        if let Some(v) = self.tolerance {
            config.tolerance = v;
        }
        if let Some(v) = self.max_regions {
            config.max_regions = v;
        }
        if let Some(v) = self.max_time_ms {
            config.max_time = Duration::from_millis(v);
        }
        if let Some(v) = self.split_strategy {
            config.split_strategy = v;
        }
        if let Some(v) = self.falsify_samples {
            config.falsify_samples = v;
        }
        if let Some(v) = self.bound_method {
            config.bound_method = v;
        }
        if let Some(v) = self.workers {
            config.workers = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
    }
}

/// A point of `W` where the composed graph is negative, decoded into the
/// network inputs and outputs it stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub witness: Vec<f64>,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub sat_value: f64,
}

impl Counterexample {
    /// Evaluates `w`; `None` unless `w ∈ W` and `N′(w) < -tolerance`.
    pub fn check(problem: &ComposedProblem, w: &[f64], tolerance: f64) -> Result<Option<Self>, VerifyError> {
        if !problem.property.input_box.contains(w) {
            return Ok(None);
        }
        let values = crate::graph::evaluate_all(&problem.graph, w)?;
        let sat_value = values[problem.graph.sink().index()][0];
        if sat_value >= -tolerance {
            return Ok(None);
        }
        let (inputs, outputs) = problem.provenance.decode_values(&values);
        Ok(Some(Counterexample { witness: w.to_vec(), inputs, outputs, sat_value }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Every region of `W` was certified; the bound is the smallest region
    /// lower bound, which is `>= -tolerance`.
    Satisfied { certified_lower_bound: f64 },
    Violated(Counterexample),
    /// Budget exhausted.
    Unknown { best_lower_bound: f64, regions_remaining: usize },
}

impl Verdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Satisfied { .. } => "sat",
            Verdict::Violated(_) => "violated",
            Verdict::Unknown { .. } => "unknown",
        }
    }

    pub fn is_satisfied(&self) -> bool {
        matches!(self, Verdict::Satisfied { .. })
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated(_))
    }
}

/// A verdict with the effort spent reaching it.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub verdict: Verdict,
    /// Regions bounded by branch-and-bound.
    pub regions: usize,
    pub time: Duration,
}

impl VerifyOutcome {
    pub fn to_json(&self) -> serde_json::Value {
        let mut out = json!({
            "verdict": self.verdict.tag(),
            "certified_lb": null,
            "witness": null,
            "decoded": null,
            "sat_value": null,
            "regions": self.regions,
            "time_ms": self.time.as_millis() as u64,
        });
        match &self.verdict {
            Verdict::Satisfied { certified_lower_bound } => {
                out["certified_lb"] = json!(certified_lower_bound);
            }
            Verdict::Violated(cex) => {
                out["witness"] = json!(cex.witness);
                out["decoded"] = json!({"inputs": cex.inputs, "outputs": cex.outputs});
                out["sat_value"] = json!(cex.sat_value);
            }
            Verdict::Unknown { best_lower_bound, regions_remaining } => {
                out["best_lb"] = json!(best_lower_bound);
                out["regions_remaining"] = json!(regions_remaining);
            }
        }
        out
    }
}
