//! Fourier–Motzkin elimination over exact rationals.
//!
//! A constraint is a vector `(a_0, …, a_{k-1}, c)` read as
//! `a · x + c >= 0`.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub(crate) type Form = Vec<BigRational>;

/// A constraint with the set of input constraints it was derived from.
#[derive(Clone)]
struct Row {
    f: Form,
    history: u128,
}

/// Rows derived from more than `eliminated + 1` inputs are redundant
/// (Chernikov); histories are only tracked for systems of at most 128 rows.
struct System {
    rows: Vec<Row>,
    nvars: usize,
    eliminated: u32,
    track: bool,
}

impl System {
    fn new(forms: &[Form], nvars: usize) -> Option<Self> {
        let track = forms.len() <= 128;
        let rows = forms
            .iter()
            .enumerate()
            .map(|(i, f)| Row { f: f.clone(), history: if track { 1u128 << i } else { 0 } })
            .collect();
        let mut s = System { rows, nvars, eliminated: 0, track };
        s.reduce()?;
        Some(s)
    }

    /// Drops trivially true and redundant rows and normalizes the rest so
    /// the first non-zero coefficient has magnitude one. Among rows with
    /// equal coefficients, a row is dropped when another is at least as
    /// tight and derived from a subset of its inputs. `None` if some
    /// constant-only row is violated.
    fn reduce(&mut self) -> Option<()> {
        let nvars = self.nvars;
        let limit = self.eliminated + 1;
        let mut groups: HashMap<Vec<BigRational>, Vec<(BigRational, u128)>> = HashMap::new();
        let mut order = Vec::new();
        for Row { mut f, history } in std::mem::take(&mut self.rows) {
            let Some(lead) = f[..nvars].iter().find(|a| !a.is_zero()).map(|a| a.abs()) else {
                if f[nvars].is_negative() {
                    return None;
                }
                continue;
            };
            if self.track && history.count_ones() > limit {
                continue;
            }
            if !lead.is_one() {
                for a in f.iter_mut() {
                    *a = &*a / &lead;
                }
            }
            let c = f.pop().expect("constant");
            let covers = |tight: &BigRational, h: u128, loose: &BigRational, g: u128| {
                tight <= loose && (!self.track || h & !g == 0)
            };
            match groups.get_mut(&f) {
                Some(group) => {
                    if group.iter().any(|(c2, h2)| covers(c2, *h2, &c, history)) {
                        continue;
                    }
                    group.retain(|(c2, h2)| !covers(&c, history, c2, *h2));
                    group.push((c, history));
                }
                None => {
                    order.push(f.clone());
                    groups.insert(f, vec![(c, history)]);
                }
            }
        }
        self.rows = order
            .into_iter()
            .flat_map(|f| {
                let group = groups.remove(&f).expect("recorded");
                group.into_iter().map(move |(c, history)| {
                    let mut f = f.clone();
                    f.push(c);
                    Row { f, history }
                })
            })
            .collect();
        Some(())
    }

    /// Eliminates `var`; `None` when infeasibility shows up.
    fn eliminate(&mut self, var: usize) -> Option<()> {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for row in std::mem::take(&mut self.rows) {
            if row.f[var].is_positive() {
                pos.push(row);
            } else if row.f[var].is_negative() {
                neg.push(row);
            } else {
                rest.push(row);
            }
        }
        self.eliminated += 1;
        for p in &pos {
            for n in &neg {
                let history = p.history | n.history;
                if self.track && history.count_ones() > self.eliminated + 1 {
                    continue;
                }
                let a = &p.f[var];
                let b = -&n.f[var];
                let f: Form = p.f.iter().zip(n.f.iter()).map(|(x, y)| x * &b + y * a).collect();
                rest.push(Row { f, history });
            }
        }
        self.rows = rest;
        self.reduce()
    }

    /// Next variable to eliminate: fewest generated pairs.
    fn pick(&self, remaining: &[usize]) -> usize {
        *remaining
            .iter()
            .min_by_key(|&&v| {
                let p = self.rows.iter().filter(|r| r.f[v].is_positive()).count();
                let n = self.rows.iter().filter(|r| r.f[v].is_negative()).count();
                (p * n, v)
            })
            .expect("a variable remains")
    }

    fn forms(&self) -> Vec<Form> {
        self.rows.iter().map(|r| r.f.clone()).collect()
    }
}

pub(crate) fn feasible(system: &[Form], nvars: usize) -> bool {
    let Some(mut current) = System::new(system, nvars) else {
        return false;
    };
    let mut remaining: Vec<usize> = (0..nvars).collect();
    while !remaining.is_empty() {
        let v = current.pick(&remaining);
        remaining.retain(|&x| x != v);
        if current.eliminate(v).is_none() {
            return false;
        }
    }
    true
}

/// Minimum of `objective` (same layout as a constraint, without `>= 0`)
/// over the polytope, with a point attaining it. `None` if the polytope is
/// empty. The polytope must be bounded.
pub(crate) fn minimize(system: &[Form], objective: &Form, nvars: usize) -> Option<(BigRational, Vec<BigRational>)> {
    // variable `nvars` is t = objective(x)
    let k = nvars + 1;
    let widen = |f: &Form| -> Form {
        let mut g = f[..nvars].to_vec();
        g.push(BigRational::zero());
        g.push(f[nvars].clone());
        g
    };
    let mut lifted: Vec<Form> = system.iter().map(widen).collect();
    let mut above = widen(objective);
    above[nvars] = -BigRational::one();
    let below: Form = above.iter().map(|a| -a).collect();
    lifted.push(above);
    lifted.push(below);

    let mut current = System::new(&lifted, k)?;
    let mut stages: Vec<(usize, Vec<Form>)> = Vec::new();
    let mut remaining: Vec<usize> = (0..nvars).collect();
    while !remaining.is_empty() {
        let v = current.pick(&remaining);
        remaining.retain(|&x| x != v);
        stages.push((v, current.forms()));
        current.eliminate(v)?;
    }

    let (lo, hi) = range(&current.forms(), nvars, &vec![BigRational::zero(); k]);
    let t = lo?;
    if let Some(h) = hi {
        if h < t {
            return None;
        }
    }
    let mut point = vec![BigRational::zero(); k];
    point[nvars] = t.clone();
    for (v, system) in stages.iter().rev() {
        let (lo, hi) = range(system, *v, &point);
        point[*v] = match (lo, hi) {
            (Some(l), _) => l,
            (None, Some(h)) => h,
            (None, None) => BigRational::zero(),
        };
    }
    point.truncate(nvars);
    Some((t, point))
}

/// Bounds on variable `var` implied by `system` when every other variable
/// takes its value from `point`.
fn range(system: &[Form], var: usize, point: &[BigRational]) -> (Option<BigRational>, Option<BigRational>) {
    let k = point.len();
    let mut lo: Option<BigRational> = None;
    let mut hi: Option<BigRational> = None;
    for f in system {
        let a = &f[var];
        if a.is_zero() {
            continue;
        }
        let mut rest = f[k].clone();
        for j in 0..k {
            if j != var && !f[j].is_zero() {
                rest += &f[j] * &point[j];
            }
        }
        let bound = -rest / a;
        if a.is_positive() {
            if lo.as_ref().is_none_or(|l| bound > *l) {
                lo = Some(bound);
            }
        } else if hi.as_ref().is_none_or(|h| bound < *h) {
            hi = Some(bound);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn form(v: &[i64]) -> Form {
        v.iter().map(|&x| r(x)).collect()
    }

    #[test]
    fn minimum_over_unit_square() {
        // 0 <= x, y <= 1; minimize x - 2y + 1
        let system = vec![
            form(&[1, 0, 0]),
            form(&[-1, 0, 1]),
            form(&[0, 1, 0]),
            form(&[0, -1, 1]),
        ];
        let (t, p) = minimize(&system, &form(&[1, -2, 1]), 2).unwrap();
        assert_eq!(t, r(-1));
        assert_eq!(p, vec![r(0), r(1)]);
    }

    #[test]
    fn detects_infeasibility() {
        // x >= 1, x <= 0
        let system = vec![form(&[1, -1]), form(&[-1, 0])];
        assert!(!feasible(&system, 1));
        assert!(minimize(&system, &form(&[1, 0]), 1).is_none());
    }

    #[test]
    fn triangle() {
        // x >= 0, y >= 0, x + y <= 1; minimize -x - y  → -1
        let system = vec![form(&[1, 0, 0]), form(&[0, 1, 0]), form(&[-1, -1, 1])];
        let (t, p) = minimize(&system, &form(&[-1, -1, 0]), 2).unwrap();
        assert_eq!(t, r(-1));
        assert_eq!(&p[0] + &p[1], r(1));
        assert!(feasible(&system, 2));
    }
}
