mod common;

use common::{outputs_for, random_box, random_graph, random_mlp, random_params};
use hyperspec::compose::{self_compose, staged_evaluate};
use hyperspec::graph::gadgets::{abs_gadget, linf_norm_gadget, max_gadget, min_gadget, project_gadget};
use hyperspec::graph::{evaluate_all, evaluate_flat, lower_to_relu, validate, Hyperrectangle};
use hyperspec::io::{graph_from_json, graph_to_json};
use hyperspec::specs::{build, compile_dnf, Atom, DnfFormula, SpecKind};
use hyperspec::verify::{backward_linear_bounds, falsify, interval_bounds};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

fn max_ref(a: f64, b: f64) -> f64 {
    relu(a - b) + b
}

fn min_ref(a: f64, b: f64) -> f64 {
    -max_ref(-a, -b)
}

fn tree(mut xs: Vec<f64>, pair: fn(f64, f64) -> f64) -> f64 {
    while xs.len() > 1 {
        let mut next: Vec<f64> = xs.chunks_exact(2).map(|p| pair(p[0], p[1])).collect();
        if xs.len() % 2 == 1 {
            next.push(xs[xs.len() - 1]);
        }
        xs = next;
    }
    xs[0]
}

/// Error budget of a few roundings at the scale of `xs`.
fn rounding(xs: &[f64]) -> f64 {
    4.0 * f64::EPSILON * xs.iter().map(|x| x.abs()).sum::<f64>()
}

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3..1e3f64, -1.0..1.0f64, Just(0.0), Just(-0.0), (-8i32..8).prop_map(f64::from)]
}

fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|d| {
        (prop::collection::vec(value(), d), prop::collection::vec(value(), d), prop::collection::vec(any::<bool>(), d))
            .prop_map(|(a, mut b, tie)| {
                for i in 0..a.len() {
                    if tie[i] {
                        b[i] = a[i];
                    }
                }
                (a, b)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn pairwise_gadgets_match_the_identity((a, b) in pairs()) {
        let d = a.len();
        let mut u = a.clone();
        u.extend_from_slice(&b);
        let mx = evaluate_flat(&max_gadget(d).unwrap(), &u).unwrap();
        let mn = evaluate_flat(&min_gadget(d).unwrap(), &u).unwrap();
        for i in 0..d {
            prop_assert_eq!(mx[i].to_bits(), max_ref(a[i], b[i]).to_bits());
            prop_assert_eq!(mn[i].to_bits(), min_ref(a[i], b[i]).to_bits());
            if a[i] == b[i] {
                prop_assert_eq!(mx[i], a[i]);
                prop_assert_eq!(mn[i], a[i]);
            }
        }
    }

    #[test]
    fn abs_and_norm_are_exact(x in prop::collection::vec(value(), 1..9)) {
        let abs = evaluate_flat(&abs_gadget(x.len()).unwrap(), &x).unwrap();
        for (a, v) in abs.iter().zip(&x) {
            prop_assert_eq!(*a, v.abs());
        }
        let norm = evaluate_flat(&linf_norm_gadget(x.len()).unwrap(), &x).unwrap();
        let abs_ref: Vec<f64> = x.iter().map(|v| max_ref(*v, -*v)).collect();
        prop_assert_eq!(norm[0].to_bits(), tree(abs_ref, max_ref).to_bits());
        // against the real maximum only rounding separates them
        let exact = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!((norm[0] - exact).abs() <= rounding(&x), "{} vs {}", norm[0], exact);
    }

    #[test]
    fn projection_matches_its_formula_and_is_idempotent(
        bounds in prop::collection::vec((-5.0..5.0f64, 0.0..4.0f64), 1..5),
        raw in prop::collection::vec(-10.0..10.0f64, 5),
        at_edge in prop::collection::vec(0u8..3, 5),
    ) {
        let lo: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        let hi: Vec<f64> = bounds.iter().map(|b| b.0 + b.1).collect();
        let bx = Hyperrectangle::new(lo.clone(), hi.clone()).unwrap();
        let g = project_gadget(&bx).unwrap();
        let x: Vec<f64> = (0..lo.len())
            .map(|i| match at_edge[i] { 0 => lo[i], 1 => hi[i], _ => raw[i] })
            .collect();
        let once = evaluate_flat(&g, &x).unwrap();
        for i in 0..x.len() {
            prop_assert_eq!(once[i].to_bits(), min_ref(max_ref(x[i], lo[i]), hi[i]).to_bits());
            let exact = x[i].clamp(lo[i], hi[i]);
            prop_assert!((once[i] - exact).abs() <= rounding(&[x[i], lo[i], hi[i]]), "{} vs {}", once[i], exact);
        }
        prop_assert_eq!(evaluate_flat(&g, &once).unwrap(), once);
    }
}

fn formulas() -> impl Strategy<Value = (DnfFormula, Vec<Vec<f64>>)> {
    (2usize..7).prop_flat_map(|dim| {
        let atom = (0..dim, 0..dim).prop_map(|(l, r)| Atom::new(l, r));
        let clauses = prop::collection::vec(prop::collection::vec(atom, 1..4), 1..4);
        // small integers make ties common
        let vectors = prop::collection::vec(prop::collection::vec((-3i32..3).prop_map(f64::from), dim), 1..20);
        (clauses, vectors).prop_map(move |(c, v)| (DnfFormula::new(c, dim).unwrap(), v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn compiled_dnf_sign_matches_the_formula((formula, vectors) in formulas()) {
        let g = compile_dnf(&formula).unwrap();
        for u in vectors {
            let got = evaluate_flat(&g, &u).unwrap()[0];
            prop_assert_eq!(got >= 0.0, formula.holds(&u), "u = {:?}, value {}", u, got);
            let clause_values: Vec<f64> = formula
                .clauses()
                .iter()
                .map(|c| tree(c.iter().map(|a| u[a.lhs] - u[a.rhs]).collect(), min_ref))
                .collect();
            prop_assert_eq!(got.to_bits(), tree(clause_values, max_ref).to_bits());
        }
    }
}

fn spec_kind() -> impl Strategy<Value = SpecKind> {
    prop::sample::select(SpecKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composed_graph_equals_the_staged_pipeline(kind in spec_kind(), seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = outputs_for(kind, 2);
        let net = random_mlp(&mut rng, &[n, 3, m]);
        let spec = build(kind, &random_params(&mut rng, kind, n, m)).unwrap();
        let problem = self_compose(&net, &spec).unwrap();
        prop_assert!(validate(&problem.graph).is_ok());
        for _ in 0..20 {
            let w = spec.w_box().sample(&mut rng);
            let staged = staged_evaluate(&net, &spec, &w).unwrap();
            prop_assert_eq!(problem.evaluate(&w).unwrap().to_bits(), staged.sat.to_bits());
            let (xs, ys) = problem.decode(&w).unwrap();
            prop_assert_eq!(xs, staged.xs);
            prop_assert_eq!(ys, staged.ys);
        }
    }

    #[test]
    fn bounds_contain_samples_and_backward_dominates(seed in any::<u64>(), n in 1usize..4, steps in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, steps);
        let bx = random_box(&mut rng, n);
        let ibp = interval_bounds(&g, &bx).unwrap();
        let lin = backward_linear_bounds(&g, &bx).unwrap();
        for _ in 0..50 {
            let values = evaluate_all(&g, &bx.sample(&mut rng)).unwrap();
            prop_assert_eq!(ibp.check_containment(&values, 0.0), Ok(()));
            prop_assert_eq!(lin.check_containment(&values, 1e-9), Ok(()));
        }
        for (l, i) in lin.sink_lower().iter().zip(ibp.sink_lower()) {
            prop_assert!(*l >= i - 1e-9, "{} < {}", l, i);
        }
    }

    #[test]
    fn lowering_and_serialization_preserve_values(seed in any::<u64>(), n in 1usize..4, steps in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, steps);
        let lowered = lower_to_relu(&g).unwrap().graph;
        prop_assert!(validate(&lowered).is_ok());
        let back = graph_from_json(&graph_to_json(&g).unwrap()).unwrap();
        prop_assert_eq!(&back, &g);
        let bx = random_box(&mut rng, n);
        for _ in 0..20 {
            let x = bx.sample(&mut rng);
            let want = evaluate_flat(&g, &x).unwrap();
            let got = evaluate_flat(&lowered, &x).unwrap();
            for (a, b) in got.iter().zip(&want) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{} vs {}", a, b);
            }
            prop_assert_eq!(evaluate_flat(&back, &x).unwrap(), want);
        }
    }

    #[test]
    fn falsify_witnesses_are_real(kind in spec_kind(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = outputs_for(kind, 1);
        let net = random_mlp(&mut rng, &[2, 3, m]);
        let spec = build(kind, &random_params(&mut rng, kind, 2, m)).unwrap();
        let problem = self_compose(&net, &spec).unwrap();
        if let Some(cex) = falsify(&problem, 500, seed, 1e-9).unwrap() {
            prop_assert!(problem.property.input_box.contains(&cex.witness));
            let v = problem.evaluate(&cex.witness).unwrap();
            prop_assert_eq!(v, cex.sat_value);
            prop_assert!(v < -1e-9);
            let (xs, ys) = problem.decode(&cex.witness).unwrap();
            prop_assert!(!spec.output_set_contains(&xs, &ys));
        }
    }
}
