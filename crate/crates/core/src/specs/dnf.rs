use crate::graph::{Graph, GraphBuilder, GraphError, NodeId};

use super::SpecError;

/// The comparison `u[lhs] >= u[rhs]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom {
    pub lhs: usize,
    pub rhs: usize,
}

impl Atom {
    pub fn new(lhs: usize, rhs: usize) -> Self {
        Atom { lhs, rhs }
    }
}

/// A disjunction of conjunctions of [`Atom`]s over a vector of length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DnfFormula {
    clauses: Vec<Vec<Atom>>,
    dim: usize,
}

impl DnfFormula {
    pub fn new(clauses: Vec<Vec<Atom>>, dim: usize) -> Result<Self, SpecError> {
        if clauses.is_empty() {
            return Err(SpecError::InvalidFormula("formula has no clauses".into()));
        }
        if let Some(pos) = clauses.iter().position(Vec::is_empty) {
            return Err(SpecError::InvalidFormula(format!("clause {pos} is empty")));
        }
        for atom in clauses.iter().flatten() {
            if atom.lhs >= dim || atom.rhs >= dim {
                return Err(SpecError::InvalidFormula(format!(
                    "atom u[{}] >= u[{}] out of range for dimension {dim}",
                    atom.lhs, atom.rhs
                )));
            }
        }
        Ok(DnfFormula { clauses, dim })
    }

    pub fn clauses(&self) -> &[Vec<Atom>] {
        &self.clauses
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Direct boolean evaluation.
    pub fn holds(&self, u: &[f64]) -> bool {
        self.clauses
            .iter()
            .any(|clause| clause.iter().all(|a| u[a.lhs] >= u[a.rhs]))
    }
}

/// Compiles `formula` into a graph `g` with
/// `g(u) = max_clause min_atom (u[lhs] - u[rhs])`, which is non-negative
/// exactly when the formula holds.
pub fn compile_dnf(formula: &DnfFormula) -> Result<Graph, SpecError> {
    let mut b = GraphBuilder::new();
    let u = b.input(formula.dim())?;
    let out = compile_into(&mut b, formula, u)?;
    Ok(b.finish(out)?)
}

/// Emits the satisfaction network for `formula` reading the vector `u`.
pub(crate) fn compile_into(
    b: &mut GraphBuilder,
    formula: &DnfFormula,
    u: NodeId,
) -> Result<NodeId, GraphError> {
    let mut clause_values = Vec::with_capacity(formula.clauses.len());
    for clause in &formula.clauses {
        let lhs = b.select(u, clause.iter().map(|a| a.lhs).collect())?;
        let rhs = b.select(u, clause.iter().map(|a| a.rhs).collect())?;
        let diff = b.sub(lhs, rhs)?;
        clause_values.push(b.reduce_min_tree(diff)?);
    }
    let all = b.concat(&clause_values)?;
    b.reduce_max_tree(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::evaluate_flat;

    #[test]
    fn single_atom() {
        let f = DnfFormula::new(vec![vec![Atom::new(0, 1)]], 2).unwrap();
        let g = compile_dnf(&f).unwrap();
        assert_eq!(evaluate_flat(&g, &[3.0, 1.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn two_clauses_by_hand() {
        // (u1 >= u2 ∧ u1 >= u3) ∨ (u2 >= u1) at u = (1, 2, 0)
        let f = DnfFormula::new(
            vec![vec![Atom::new(0, 1), Atom::new(0, 2)], vec![Atom::new(1, 0)]],
            3,
        )
        .unwrap();
        let g = compile_dnf(&f).unwrap();
        assert_eq!(evaluate_flat(&g, &[1.0, 2.0, 0.0]).unwrap(), vec![1.0]);
        assert!(f.holds(&[1.0, 2.0, 0.0]));
    }

    #[test]
    fn malformed_formulas() {
        assert!(DnfFormula::new(vec![], 2).is_err());
        assert!(DnfFormula::new(vec![vec![]], 2).is_err());
        assert!(DnfFormula::new(vec![vec![Atom::new(0, 2)]], 2).is_err());
    }
}
