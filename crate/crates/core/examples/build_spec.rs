//! Builds each of the five specs for a 2-input, 2-output network and shows
//! what its generator produces for one point of `W`.

use hyperspec::graph::{evaluate_flat, Hyperrectangle};
use hyperspec::specs::{build, SpecKind, SpecParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = Hyperrectangle::uniform(2, 0.0, 1.0)?;
    let params = SpecParams::new(domain, 2)
        .with_robustness(0.1, 0.05)
        .with_lipschitz(1.5)
        .with_fairness(3, 0);
    for kind in SpecKind::ALL {
        let spec = build(kind, &params)?;
        let w = spec.w_box().center();
        let generated = evaluate_flat(spec.n_in(), &w)?;
        println!("{:<24} v = {}  dim W = {}", kind.name(), spec.copies(), spec.w_box().dim());
        println!("{:<24} N_in(center) = {generated:?}", "");
    }

    // a spec description file, as the command-line tool reads it
    let text = r#"{"spec": "lipschitz", "domain": {"lo": [-1, -1], "hi": [1, 1]}, "lipschitz": 0.5}"#;
    let spec = hyperspec::specs::SpecDescription::from_json(text)?.build(1)?;
    println!("from file: {} over a {}-dimensional W", spec.kind().name(), spec.w_box().dim());
    Ok(())
}
