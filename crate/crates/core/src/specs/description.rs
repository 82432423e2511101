use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::Hyperrectangle;
use crate::verify::ConfigOverrides;

use super::{build, Direction, Nndh, SpecError, SpecKind, SpecParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDoc {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// On-disk description of a spec, e.g.
///
/// ```json
/// {"spec": "monotonicity", "domain": {"lo": [0.0], "hi": [1.0]},
///  "input_index": 0, "output_index": 0, "direction": "non_increasing"}
/// ```
///
/// The network's output dimension is not part of the file; it is taken
/// from the network the spec is checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDescription {
    pub spec: SpecKind,
    pub domain: DomainDoc,
    #[serde(default)]
    pub input_index: usize,
    #[serde(default)]
    pub output_index: usize,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub lipschitz: f64,
    #[serde(default)]
    pub attribute_values: usize,
    #[serde(default)]
    pub sensitive_index: usize,
    /// Verifier settings; command-line flags take precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<ConfigOverrides>,
}

impl SpecDescription {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        serde_json::from_str(text).map_err(|e| SpecError::InvalidParams(format!("spec file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpecError::InvalidParams(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn params(&self, output_dim: usize) -> Result<SpecParams, SpecError> {
        let domain = Hyperrectangle::new(self.domain.lo.clone(), self.domain.hi.clone())?;
        Ok(SpecParams {
            domain,
            output_dim,
            input_index: self.input_index,
            output_index: self.output_index,
            direction: self.direction,
            delta: self.delta,
            epsilon: self.epsilon,
            lipschitz: self.lipschitz,
            attribute_values: self.attribute_values,
            sensitive_index: self.sensitive_index,
        })
    }

    pub fn build(&self, output_dim: usize) -> Result<Nndh, SpecError> {
        build(self.spec, &self.params(output_dim)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_monotonicity() {
        let d = SpecDescription::from_json(
            r#"{"spec": "monotonicity", "domain": {"lo": [0.0], "hi": [1.0]}}"#,
        )
        .unwrap();
        assert_eq!(d.spec, SpecKind::Monotonicity);
        assert_eq!(d.direction, Direction::NonIncreasing);
        let s = d.build(1).unwrap();
        assert_eq!(s.copies(), 2);
    }

    #[test]
    fn rejects_unknown_fields_and_kinds() {
        assert!(SpecDescription::from_json(
            r#"{"spec": "monotonicity", "domain": {"lo": [0.0], "hi": [1.0]}, "radius": 3}"#
        )
        .is_err());
        assert!(SpecDescription::from_json(r#"{"spec": "fairness", "domain": {"lo": [0], "hi": [1]}}"#).is_err());
    }

    #[test]
    fn inverted_domain_is_an_error() {
        let d = SpecDescription::from_json(
            r#"{"spec": "lipschitz", "domain": {"lo": [1.0], "hi": [0.0]}, "lipschitz": 1.0}"#,
        )
        .unwrap();
        assert!(d.build(1).is_err());
    }
}
