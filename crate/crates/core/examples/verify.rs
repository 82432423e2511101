//! Branch-and-bound on a small random ReLU network against each spec.

use hyperspec::compose::self_compose;
use hyperspec::graph::{Graph, GraphBuilder, Hyperrectangle, Matrix};
use hyperspec::specs::{build, SpecKind, SpecParams};
use hyperspec::verify::{verify, VerifyConfig};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn network(seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |n: usize| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect::<Vec<f64>>();
    let mut b = GraphBuilder::new();
    let x = b.input(2).unwrap();
    let h = b.affine(x, Matrix::new(4, 2, uniform(8)).unwrap(), uniform(4)).unwrap();
    let h = b.relu(h).unwrap();
    let y = b.affine(h, Matrix::new(2, 4, uniform(8)).unwrap(), uniform(2)).unwrap();
    b.finish(y).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = network(11);
    let params = SpecParams::new(Hyperrectangle::uniform(2, 0.0, 1.0)?, 2)
        .with_robustness(0.05, 0.5)
        .with_lipschitz(3.0)
        .with_fairness(2, 0);
    let config = VerifyConfig::default();
    for kind in SpecKind::ALL {
        let problem = self_compose(&net, &build(kind, &params)?)?;
        let outcome = verify(&problem, &config)?;
        println!("{:<24} {}", kind.name(), outcome.to_json());
    }
    Ok(())
}
