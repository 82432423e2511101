use hyperspec::compose::{satisfaction_equivalence_check, self_compose, staged_evaluate};
use hyperspec::graph::{GraphBuilder, Hyperrectangle, Matrix};
use hyperspec::specs::{build_monotonicity, SpecParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut b = GraphBuilder::new();
    let x = b.input(1)?;
    let y = b.affine(x, Matrix::identity(1), vec![0.0])?;
    let identity = b.finish(y)?;

    let spec = build_monotonicity(&SpecParams::new(Hyperrectangle::uniform(1, 0.0, 1.0)?, 1))?;
    let problem = self_compose(&identity, &spec)?;
    println!("composed graph: {} nodes, input dimension {}", problem.graph.len(), problem.graph.input_dim()?);

    let w = [0.2, 0.7];
    println!("N'(0.2, 0.7) = {}", problem.evaluate(&w)?);
    let (xs, ys) = problem.decode(&w)?;
    println!("decoded inputs {xs:?}, outputs {ys:?}");
    println!("staged pipeline: {:?}", staged_evaluate(&identity, &spec, &w)?);

    let report = satisfaction_equivalence_check(&identity, &spec, 1000, 7, 1e-12)?;
    println!(
        "{} samples, {} violations, {} disagreements with the output-set predicate",
        report.samples,
        report.violations,
        report.disagreements.len()
    );
    Ok(())
}
