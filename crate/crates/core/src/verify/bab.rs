use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rayon::prelude::*;

use crate::compose::ComposedProblem;
use crate::graph::{evaluate_flat, lower_to_relu, Hyperrectangle};

use super::bounds::{Engine, Phase, Phases};
use super::lp::{solve_region, LpOutcome};
use super::{falsify, Counterexample, SplitStrategy, Verdict, VerifyConfig, VerifyError, VerifyOutcome};

struct Region {
    bx: Hyperrectangle,
    phases: Phases,
    /// Lower bound inherited from the parent.
    lb: f64,
    seq: u64,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Region {}

impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Region {
    // max-heap: lowest bound first, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb).then(other.seq.cmp(&self.seq))
    }
}

enum Step {
    /// Empty under its phase constraints.
    Vacuous,
    Certified(f64),
    Violated(Counterexample),
    Split(Vec<(Hyperrectangle, Phases)>, f64),
}

/// Branch-and-bound over `W`.
///
/// Regions are boxes of `W` together with fixed ReLU phases, processed
/// lowest bound first. A region is certified when its lower bound is at
/// least `-tolerance`; regions with at most `lp_max_unstable` unstable ReLUs
/// get an LP bound and are split on their most ambiguous ReLU, others are
/// bisected. Region centres and LP minimisers are tried as witnesses.
pub fn verify(problem: &ComposedProblem, config: &VerifyConfig) -> Result<VerifyOutcome, VerifyError> {
    config.validate()?;
    let start = Instant::now();
    let done = |verdict, regions| VerifyOutcome { verdict, regions, time: start.elapsed() };

    if let Some(cex) = falsify(problem, config.falsify_samples, config.seed, config.tolerance)? {
        return Ok(done(Verdict::Violated(cex), 0));
    }

    let lowered = lower_to_relu(&problem.graph)?;
    let engine = Engine::new(&lowered.graph)?;
    let worker = Worker { problem, engine: &engine, config };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| VerifyError::Config(e.to_string()))?;

    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    heap.push(Region {
        bx: problem.property.input_box.clone(),
        phases: Phases::new(),
        lb: f64::NEG_INFINITY,
        seq,
    });
    let mut processed = 0;
    let mut certified_lb = f64::INFINITY;

    while !heap.is_empty() {
        if processed >= config.max_regions || start.elapsed() >= config.max_time {
            let best = heap.peek().map(|r| r.lb).unwrap_or(f64::NEG_INFINITY);
            let remaining = heap.len();
            log::info!("budget exhausted after {processed} regions, {remaining} open");
            return Ok(done(Verdict::Unknown { best_lower_bound: best, regions_remaining: remaining }, processed));
        }
        let take = config.workers.min(heap.len()).min(config.max_regions - processed);
        let batch: Vec<Region> = (0..take).filter_map(|_| heap.pop()).collect();
        processed += batch.len();
        let steps: Vec<Result<Step, VerifyError>> = if config.workers == 1 {
            batch.iter().map(|r| worker.process(r)).collect()
        } else {
            pool.install(|| batch.par_iter().map(|r| worker.process(r)).collect())
        };
        for step in steps {
            match step? {
                Step::Vacuous => {}
                Step::Certified(lb) => certified_lb = certified_lb.min(lb),
                Step::Violated(cex) => return Ok(done(Verdict::Violated(cex), processed)),
                Step::Split(children, lb) => {
                    for (bx, phases) in children {
                        seq += 1;
                        heap.push(Region { bx, phases, lb, seq });
                    }
                }
            }
        }
    }
    if !certified_lb.is_finite() {
        // every region was empty under its phases; fall back to the root
        // interval bound, which is sound for all of W
        let ibp = super::interval_bounds(&problem.graph, &problem.property.input_box)?;
        certified_lb = ibp.sink_lower()[0];
    }
    log::info!("certified after {processed} regions, lower bound {certified_lb}");
    Ok(done(Verdict::Satisfied { certified_lower_bound: certified_lb }, processed))
}

struct Worker<'a> {
    problem: &'a ComposedProblem,
    engine: &'a Engine<'a>,
    config: &'a VerifyConfig,
}

impl Worker<'_> {
    fn process(&self, region: &Region) -> Result<Step, VerifyError> {
        let tol = self.config.tolerance;
        let Some(rb) = self.engine.bounds(&region.bx, &region.phases, self.config.bound_method) else {
            return Ok(Step::Vacuous);
        };
        let mut lb = rb.sink_lower().max(region.lb);
        if lb >= -tol {
            return Ok(Step::Certified(lb));
        }
        let mut candidates = vec![region.bx.center()];
        let unstable = rb.unstable();
        if unstable.len() <= self.config.lp_max_unstable {
            match solve_region(self.engine, &region.bx, &region.phases, &rb, 0.0) {
                LpOutcome::Infeasible => return Ok(Step::Vacuous),
                LpOutcome::Bound { value, minimizer } => {
                    lb = lb.max(value);
                    candidates.push(minimizer);
                }
                LpOutcome::Failed => {}
            }
        }
        for w in &candidates {
            if let Some(cex) = Counterexample::check(self.problem, w, tol)? {
                return Ok(Step::Violated(cex));
            }
        }
        if lb >= -tol {
            return Ok(Step::Certified(lb));
        }

        if !unstable.is_empty() && unstable.len() <= self.config.lp_max_unstable {
            let (unit, _) = unstable
                .iter()
                .copied()
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .expect("non-empty");
            let children = [Phase::Active, Phase::Inactive]
                .into_iter()
                .map(|phase| {
                    let mut phases = region.phases.clone();
                    phases.insert(unit, phase);
                    (region.bx.clone(), phases)
                })
                .collect();
            return Ok(Step::Split(children, lb));
        }
        match self.split_axis(region) {
            Some(axis) => {
                let (a, b) = region.bx.bisect(axis);
                Ok(Step::Split(vec![(a, region.phases.clone()), (b, region.phases.clone())], lb))
            }
            None => {
                // a single point: its concrete value is exact
                let value = evaluate_flat(&self.problem.graph, region.bx.lower())?[0];
                Ok(Step::Certified(value))
            }
        }
    }

    fn split_axis(&self, region: &Region) -> Option<usize> {
        let widths = region.bx.widths();
        let splittable = (0..widths.len()).filter(|&i| {
            let (a, b) = region.bx.bisect(i);
            widths[i] > 0.0 && a != region.bx && b != region.bx
        });
        match self.config.split_strategy {
            SplitStrategy::LongestEdge => splittable.fold(None, |best: Option<usize>, i| match best {
                Some(b) if widths[b] >= widths[i] => Some(b),
                _ => Some(i),
            }),
            SplitStrategy::BestImprovement => {
                let score = |bx: &Hyperrectangle| {
                    self.engine
                        .bounds(bx, &region.phases, self.config.bound_method)
                        .map_or(f64::INFINITY, |rb| rb.sink_lower())
                };
                splittable
                    .map(|i| {
                        let (a, b) = region.bx.bisect(i);
                        (i, score(&a).min(score(&b)))
                    })
                    .fold(None, |best: Option<(usize, f64)>, (i, s)| match best {
                        Some((_, bs)) if bs >= s => best,
                        _ => Some((i, s)),
                    })
                    .map(|(i, _)| i)
            }
        }
    }
}
