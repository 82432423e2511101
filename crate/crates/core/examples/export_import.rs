//! Writes a composed problem for an external verifier (exchange-format
//! model plus a violation query) and reads the pieces back.

use hyperspec::compose::self_compose;
use hyperspec::graph::{evaluate_flat, GraphBuilder, Hyperrectangle, Matrix};
use hyperspec::io::{export_problem, import_model, load_graph, property_text, save_graph};
use hyperspec::specs::{build_monotonicity, SpecParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut b = GraphBuilder::new();
    let x = b.input(1)?;
    let h = b.affine(x, Matrix::new(2, 1, vec![1.0, -2.0])?, vec![0.1, 0.3])?;
    let r = b.relu(h)?;
    let y = b.affine(r, Matrix::new(1, 2, vec![-1.0, 0.5])?, vec![0.0])?;
    let net = b.finish(y)?;
    let spec = build_monotonicity(&SpecParams::new(Hyperrectangle::uniform(1, 0.0, 1.0)?, 1))?;
    let problem = self_compose(&net, &spec)?;

    let dir = tempfile::tempdir()?;
    let (model, property, native) =
        (dir.path().join("model.onnx"), dir.path().join("property.vnnlib"), dir.path().join("composed.json"));
    export_problem(&problem, &model, &property)?;
    save_graph(&problem.graph, &native)?;

    print!("{}", property_text(&problem));
    let imported = import_model(&model)?;
    println!("\nimported operators: {:?}", imported.report.operators);
    let reloaded = load_graph(&native)?;
    for w in [[0.1, 0.9], [0.8, 0.3]] {
        println!(
            "N'({w:?}): native {:?}, exchange {:?}, json {:?}",
            problem.evaluate(&w)?,
            evaluate_flat(&imported.graph, &w)?[0],
            evaluate_flat(&reloaded, &w)?[0]
        );
    }
    Ok(())
}
