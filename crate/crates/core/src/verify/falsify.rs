use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::compose::ComposedProblem;
use crate::graph::evaluate_flat;

use super::{Counterexample, VerifyError};

/// Searches `W` for a point with `N′(w) < -tolerance`, spending at most
/// `budget` evaluations: half on uniform samples, the rest on coordinate
/// descent from the best samples. Any returned witness has been
/// re-evaluated and lies in `W`.
pub fn falsify(
    problem: &ComposedProblem,
    budget: usize,
    seed: u64,
    tolerance: f64,
) -> Result<Option<Counterexample>, VerifyError> {
    let region = &problem.property.input_box;
    let eval = |w: &[f64]| -> Result<f64, VerifyError> { Ok(evaluate_flat(&problem.graph, w)?[0]) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spent = 0;
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let keep = 4;

    let mut seeds = vec![region.center(), region.lower().to_vec(), region.upper().to_vec()];
    while spent < budget.div_ceil(2) {
        let w = if let Some(w) = seeds.pop() { w } else { region.sample(&mut rng) };
        let v = eval(&w)?;
        spent += 1;
        if v < -tolerance {
            return Counterexample::check(problem, &w, tolerance);
        }
        best.push((v, w));
        best.sort_by(|a, b| a.0.total_cmp(&b.0));
        best.truncate(keep);
    }

    let widths = region.widths();
    let mut starts = best.into_iter();
    'restart: while spent < budget {
        let Some((mut value, mut w)) = starts.next() else {
            break;
        };
        let mut step: Vec<f64> = widths.iter().map(|x| x / 4.0).collect();
        while spent < budget {
            let mut improved = false;
            for i in 0..w.len() {
                if step[i] == 0.0 {
                    continue;
                }
                for dir in [-1.0, 1.0] {
                    if spent >= budget {
                        break 'restart;
                    }
                    let mut probe = w.clone();
                    probe[i] = (probe[i] + dir * step[i]).clamp(region.lower()[i], region.upper()[i]);
                    let v = eval(&probe)?;
                    spent += 1;
                    if v < value {
                        value = v;
                        w = probe;
                        improved = true;
                        if value < -tolerance {
                            return Counterexample::check(problem, &w, tolerance);
                        }
                        break;
                    }
                }
            }
            if !improved {
                step.iter_mut().for_each(|s| *s /= 2.0);
                if step.iter().zip(&widths).all(|(s, wd)| *s <= wd * 1e-12) {
                    continue 'restart;
                }
            }
        }
    }
    Ok(None)
}
