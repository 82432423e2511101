use crate::graph::{Graph, GraphBuilder, Hyperrectangle, Matrix, NodeId};

use super::dnf::{compile_into, Atom, DnfFormula};
use super::{Direction, Nndh, SpecError, SpecKind, SpecParams};

fn invalid(msg: impl Into<String>) -> SpecError {
    SpecError::InvalidParams(msg.into())
}

fn check_common(p: &SpecParams) -> Result<(usize, usize), SpecError> {
    let n = p.domain.dim();
    if n == 0 {
        return Err(invalid("input domain must have at least one dimension"));
    }
    if p.output_dim == 0 {
        return Err(invalid("network must have at least one output"));
    }
    Ok((n, p.output_dim))
}

/// Dispatches to the builder for `kind`.
pub fn build(kind: SpecKind, params: &SpecParams) -> Result<Nndh, SpecError> {
    match kind {
        SpecKind::Monotonicity => build_monotonicity(params),
        SpecKind::RobustnessKatz => build_global_robustness_katz(params),
        SpecKind::RobustnessExtraClass => build_global_robustness_extra_class(params),
        SpecKind::Lipschitz => build_lipschitz(params),
        SpecKind::DependencyFairness => build_dependency_fairness(params),
    }
}

/// Output `output_index` must not increase (or, for
/// [`Direction::NonDecreasing`], not decrease) when input `input_index`
/// increases.
///
/// `W = X × X`. The generator keeps both points but replaces coordinate `i`
/// of the first by `min(x⁽¹⁾ᵢ, x⁽²⁾ᵢ)` and of the second by the maximum;
/// the satisfaction network is `y⁽¹⁾ⱼ - y⁽²⁾ⱼ` (negated for the
/// non-decreasing direction).
pub fn build_monotonicity(p: &SpecParams) -> Result<Nndh, SpecError> {
    let (n, m) = check_common(p)?;
    let (i, j) = (p.input_index, p.output_index);
    if i >= n {
        return Err(invalid(format!("input index {i} out of range for {n} inputs")));
    }
    if j >= m {
        return Err(invalid(format!("output index {j} out of range for {m} outputs")));
    }
    let w_box = p.domain.product(&p.domain);

    let mut b = GraphBuilder::new();
    let w = b.input(2 * n)?;
    let a = b.select(w, vec![i])?;
    let c = b.select(w, vec![n + i])?;
    let low = b.min_pair(a, c)?;
    let high = b.max_pair(a, c)?;
    let first = splice_coordinate(&mut b, w, 0, n, i, low)?;
    let second = splice_coordinate(&mut b, w, n, n, i, high)?;
    let out = b.concat(&[first, second])?;
    let n_in = b.finish(out)?;

    let sign = match p.direction {
        Direction::NonIncreasing => 1.0,
        Direction::NonDecreasing => -1.0,
    };
    let mut row = vec![0.0; 2 * n + 2 * m];
    row[2 * n + j] = sign;
    row[2 * n + m + j] = -sign;
    let mut b = GraphBuilder::new();
    let u = b.input(2 * n + 2 * m)?;
    let out = b.affine(u, Matrix::new(1, row.len(), row)?, vec![0.0])?;
    let n_sat = b.finish(out)?;

    Nndh::new(SpecKind::Monotonicity, p.clone(), w_box, n_in, n_sat, 2, n, m)
}

/// The block `w[offset..offset + n]` with coordinate `i` replaced by `value`.
fn splice_coordinate(
    b: &mut GraphBuilder,
    w: NodeId,
    offset: usize,
    n: usize,
    i: usize,
    value: NodeId,
) -> Result<NodeId, SpecError> {
    let mut parts = Vec::new();
    if i > 0 {
        parts.push(b.slice(w, offset, offset + i)?);
    }
    parts.push(value);
    if i + 1 < n {
        parts.push(b.slice(w, offset + i + 1, offset + n)?);
    }
    Ok(b.concat(&parts)?)
}

/// `W = X × [-δ, δ]ⁿ` and `N_in(x, τ) = (x, project_X(x + τ))`.
fn robustness_generator(p: &SpecParams) -> Result<(Hyperrectangle, Graph), SpecError> {
    let n = p.domain.dim();
    if !(p.delta > 0.0) || !p.delta.is_finite() {
        return Err(invalid(format!("robustness radius must be positive, got {}", p.delta)));
    }
    let w_box = p.domain.product(&Hyperrectangle::uniform(n, -p.delta, p.delta)?);
    let mut b = GraphBuilder::new();
    let w = b.input(2 * n)?;
    let x = b.slice(w, 0, n)?;
    let tau = b.slice(w, n, 2 * n)?;
    let moved = b.add(x, tau)?;
    let projected = b.project(moved, &p.domain)?;
    let out = b.concat(&[x, projected])?;
    Ok((w_box, b.finish(out)?))
}

/// Outputs of points at most `δ` apart (L∞) differ by at most `ε` (L∞):
/// `N_sat = ε - ‖y⁽¹⁾ - y⁽²⁾‖∞`.
pub fn build_global_robustness_katz(p: &SpecParams) -> Result<Nndh, SpecError> {
    let (n, m) = check_common(p)?;
    if !(p.epsilon > 0.0) || !p.epsilon.is_finite() {
        return Err(invalid(format!("permitted change must be positive, got {}", p.epsilon)));
    }
    let (w_box, n_in) = robustness_generator(p)?;

    let mut b = GraphBuilder::new();
    let u = b.input(2 * n + 2 * m)?;
    let y1 = b.slice(u, 2 * n, 2 * n + m)?;
    let y2 = b.slice(u, 2 * n + m, 2 * n + 2 * m)?;
    let diff = b.sub(y1, y2)?;
    let norm = b.linf_norm(diff)?;
    let out = b.affine(norm, Matrix::new(1, 1, vec![-1.0])?, vec![p.epsilon])?;
    let n_sat = b.finish(out)?;

    Nndh::new(SpecKind::RobustnessKatz, p.clone(), w_box, n_in, n_sat, 2, n, m)
}

/// Points at most `δ` apart get the same class unless one of them is
/// assigned the extra rejection class (the network's last output).
pub fn build_global_robustness_extra_class(p: &SpecParams) -> Result<Nndh, SpecError> {
    let (n, outputs) = check_common(p)?;
    if outputs < 2 {
        return Err(invalid("extra-class robustness needs at least one class plus the rejection output"));
    }
    let (w_box, n_in) = robustness_generator(p)?;
    let formula = extra_class_formula(outputs - 1)?;

    let mut b = GraphBuilder::new();
    let u = b.input(2 * n + 2 * outputs)?;
    let ys = b.slice(u, 2 * n, 2 * n + 2 * outputs)?;
    let out = compile_into(&mut b, &formula, ys)?;
    let n_sat = b.finish(out)?;

    Nndh::new(SpecKind::RobustnessExtraClass, p.clone(), w_box, n_in, n_sat, 2, n, outputs)
}

/// `NR(y⁽¹⁾) ∨ NR(y⁽²⁾) ∨ Same(y⁽¹⁾, y⁽²⁾)` over `(y⁽¹⁾ ‖ y⁽²⁾)` where each
/// block has `classes + 1` entries and the last entry is the rejection class.
pub(crate) fn extra_class_formula(classes: usize) -> Result<DnfFormula, SpecError> {
    let block = classes + 1;
    let reject = classes;
    let mut clauses = Vec::new();
    for copy in 0..2 {
        let base = copy * block;
        clauses.push((0..classes).map(|j| Atom::new(base + reject, base + j)).collect());
    }
    clauses.extend(same_class_clauses(2, block, classes));
    DnfFormula::new(clauses, 2 * block)
}

/// One clause per candidate class `j1`: in every copy `k`, `y⁽ᵏ⁾_{j1}` is
/// at least every other class score. Comparisons of a class with itself are
/// trivially true and dropped; a clause left empty by that keeps one.
fn same_class_clauses(copies: usize, block: usize, classes: usize) -> Vec<Vec<Atom>> {
    (0..classes)
        .map(|j1| {
            let mut clause: Vec<Atom> = (0..copies)
                .flat_map(|k| {
                    (0..classes)
                        .filter(move |&j2| j2 != j1)
                        .map(move |j2| Atom::new(k * block + j1, k * block + j2))
                })
                .collect();
            if clause.is_empty() {
                clause.push(Atom::new(j1, j1));
            }
            clause
        })
        .collect()
}

/// `‖y⁽¹⁾ - y⁽²⁾‖∞ <= K ‖x⁽¹⁾ - x⁽²⁾‖∞` over `W = X × X`.
pub fn build_lipschitz(p: &SpecParams) -> Result<Nndh, SpecError> {
    let (n, m) = check_common(p)?;
    if !(p.lipschitz >= 0.0) || !p.lipschitz.is_finite() {
        return Err(invalid(format!("Lipschitz constant must be non-negative, got {}", p.lipschitz)));
    }
    let w_box = p.domain.product(&p.domain);

    let mut b = GraphBuilder::new();
    let w = b.input(2 * n)?;
    let n_in = b.finish(w)?;

    let mut b = GraphBuilder::new();
    let u = b.input(2 * n + 2 * m)?;
    let x1 = b.slice(u, 0, n)?;
    let x2 = b.slice(u, n, 2 * n)?;
    let dx = b.sub(x1, x2)?;
    let input_gap = b.linf_norm(dx)?;
    let y1 = b.slice(u, 2 * n, 2 * n + m)?;
    let y2 = b.slice(u, 2 * n + m, 2 * n + 2 * m)?;
    let dy = b.sub(y1, y2)?;
    let output_gap = b.linf_norm(dy)?;
    let gaps = b.concat(&[input_gap, output_gap])?;
    let out = b.affine(gaps, Matrix::new(1, 2, vec![p.lipschitz, -1.0])?, vec![0.0])?;
    let n_sat = b.finish(out)?;

    Nndh::new(SpecKind::Lipschitz, p.clone(), w_box, n_in, n_sat, 2, n, m)
}

/// Inputs that differ only in the sensitive attribute get the same class.
///
/// `W = X`; copy `k` (1-based) is `assign(k, x)`, which zeroes the
/// sensitive coordinate and adds `k` there.
pub fn build_dependency_fairness(p: &SpecParams) -> Result<Nndh, SpecError> {
    let (n, m) = check_common(p)?;
    let copies = p.attribute_values;
    if copies < 2 {
        return Err(invalid(format!("sensitive attribute needs at least 2 values, got {copies}")));
    }
    let s = p.sensitive_index;
    if s >= n {
        return Err(invalid(format!("sensitive index {s} out of range for {n} inputs")));
    }

    let mut b = GraphBuilder::new();
    let x = b.input(n)?;
    let mut assigned = Vec::with_capacity(copies);
    for k in 1..=copies {
        let mut weight = Matrix::identity(n);
        weight.set(s, s, 0.0);
        let mut bias = vec![0.0; n];
        bias[s] = k as f64;
        assigned.push(b.affine(x, weight, bias)?);
    }
    let out = b.concat(&assigned)?;
    let n_in = b.finish(out)?;

    let formula = DnfFormula::new(same_class_clauses(copies, m, m), copies * m)?;
    let mut b = GraphBuilder::new();
    let u = b.input(copies * (n + m))?;
    let ys = b.slice(u, copies * n, copies * (n + m))?;
    let out = compile_into(&mut b, &formula, ys)?;
    let n_sat = b.finish(out)?;

    Nndh::new(SpecKind::DependencyFairness, p.clone(), p.domain.clone(), n_in, n_sat, copies, n, m)
}
