use hyperspec::graph::{evaluate_flat, GraphBuilder, Hyperrectangle, Matrix};
use hyperspec::verify::{backward_linear_bounds, interval_bounds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // y = relu(x0 + x1) - relu(x0 - x1): dependent terms defeat intervals
    let mut b = GraphBuilder::new();
    let x = b.input(2)?;
    let h = b.affine(x, Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]])?, vec![0.0, 0.0])?;
    let r = b.relu(h)?;
    let y = b.affine(r, Matrix::from_rows(&[vec![1.0, -1.0]])?, vec![0.0])?;
    let g = b.finish(y)?;

    for (lo, hi) in [(-1.0, 1.0), (0.0, 1.0), (0.5, 1.0)] {
        let bx = Hyperrectangle::uniform(2, lo, hi)?;
        let ibp = interval_bounds(&g, &bx)?;
        let lin = backward_linear_bounds(&g, &bx)?;
        let mut rng = rand::rng();
        let sampled = (0..10_000)
            .map(|_| evaluate_flat(&g, &bx.sample(&mut rng)).map(|v| v[0]))
            .collect::<Result<Vec<_>, _>>()?;
        let low = sampled.iter().copied().fold(f64::INFINITY, f64::min);
        let high = sampled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("box [{lo}, {hi}]^2");
        println!("  interval        [{:.4}, {:.4}]", ibp.sink_lower()[0], ibp.sink_upper()[0]);
        println!("  backward-linear [{:.4}, {:.4}]", lin.sink_lower()[0], lin.sink_upper()[0]);
        println!("  sampled         [{low:.4}, {high:.4}]");
    }
    Ok(())
}
