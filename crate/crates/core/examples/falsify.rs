//! Searching for a counterexample without proving anything.

use hyperspec::compose::self_compose;
use hyperspec::graph::{GraphBuilder, Hyperrectangle, Matrix};
use hyperspec::specs::{build_lipschitz, SpecParams};
use hyperspec::verify::falsify;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // |x - 0.5| has slope 1 everywhere, so K = 0.9 is violated
    let mut b = GraphBuilder::new();
    let x = b.input(1)?;
    let h = b.affine(x, Matrix::new(2, 1, vec![1.0, -1.0])?, vec![-0.5, 0.5])?;
    let r = b.relu(h)?;
    let y = b.affine(r, Matrix::new(1, 2, vec![1.0, 1.0])?, vec![0.0])?;
    let net = b.finish(y)?;

    for k in [0.9, 1.0] {
        let spec = build_lipschitz(&SpecParams::new(Hyperrectangle::uniform(1, 0.0, 1.0)?, 1).with_lipschitz(k))?;
        let problem = self_compose(&net, &spec)?;
        match falsify(&problem, 2000, 42, 1e-9)? {
            Some(cex) => println!("K = {k}: x = {:?}, y = {:?}, N' = {:e}", cex.inputs, cex.outputs, cex.sat_value),
            None => println!("K = {k}: nothing found in 2000 evaluations"),
        }
    }
    Ok(())
}
