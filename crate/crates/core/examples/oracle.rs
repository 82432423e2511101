//! The exact oracle enumerates activation patterns and minimizes over each
//! with rational arithmetic. It is slow but has no rounding, so it serves as
//! the reference for the verifier on small problems.

use hyperspec::compose::self_compose;
use hyperspec::graph::{GraphBuilder, Hyperrectangle, Matrix};
use hyperspec::specs::{build_global_robustness_katz, SpecParams};
use hyperspec::verify::{oracle_minimum, oracle_verify, verify, VerifyConfig, DEFAULT_ORACLE_CAP};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // relu(x) - relu(x - 0.5) rises with slope 1 and then levels off
    let mut b = GraphBuilder::new();
    let x = b.input(1)?;
    let h = b.affine(x, Matrix::new(2, 1, vec![1.0, 1.0])?, vec![0.0, -0.5])?;
    let r = b.relu(h)?;
    let y = b.affine(r, Matrix::new(1, 2, vec![1.0, -1.0])?, vec![0.0])?;
    let net = b.finish(y)?;

    let domain = Hyperrectangle::uniform(1, 0.0, 1.0)?;
    for epsilon in [0.1, 0.05] {
        let spec = build_global_robustness_katz(&SpecParams::new(domain.clone(), 1).with_robustness(0.1, epsilon))?;
        let problem = self_compose(&net, &spec)?;
        let exact = oracle_minimum(&problem.graph, &problem.property.input_box, DEFAULT_ORACLE_CAP)?;
        println!(
            "epsilon {epsilon}: min N' = {} ({}) at {:?} over {} patterns",
            exact.value,
            exact.value_f64(),
            exact.witness_f64(),
            exact.patterns
        );
        let by_oracle = oracle_verify(&problem)?;
        let by_search = verify(&problem, &VerifyConfig::default())?.verdict;
        println!("  oracle {}, branch-and-bound {}", by_oracle.tag(), by_search.tag());
    }
    Ok(())
}
