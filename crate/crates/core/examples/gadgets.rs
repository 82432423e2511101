//! Piecewise-linear building blocks made of ReLUs, and the compiler from
//! comparison formulas to satisfaction networks.

use hyperspec::graph::gadgets::{linf_norm_gadget, max_gadget, project_gadget};
use hyperspec::graph::{evaluate_flat, Hyperrectangle};
use hyperspec::specs::{compile_dnf, Atom, DnfFormula};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let max = max_gadget(2)?;
    println!("max((1, -3), (2, -4)) = {:?}", evaluate_flat(&max, &[1.0, -3.0, 2.0, -4.0])?);

    let norm = linf_norm_gadget(3)?;
    println!("||(0.5, -2, 1)||inf = {:?}", evaluate_flat(&norm, &[0.5, -2.0, 1.0])?);

    let unit = Hyperrectangle::uniform(2, 0.0, 1.0)?;
    let project = project_gadget(&unit)?;
    println!("project (1.7, -0.2) onto [0,1]^2 = {:?}", evaluate_flat(&project, &[1.7, -0.2])?);

    // (u0 >= u1 and u0 >= u2) or u2 >= u1
    let formula = DnfFormula::new(vec![vec![Atom::new(0, 1), Atom::new(0, 2)], vec![Atom::new(2, 1)]], 3)?;
    let g = compile_dnf(&formula)?;
    for u in [[3.0, 1.0, 2.0], [0.0, 1.0, -1.0], [0.0, 1.0, 1.0]] {
        let v = evaluate_flat(&g, &u)?[0];
        println!("u = {u:?}: network {v:+}, formula {}", formula.holds(&u));
    }
    println!("{} nodes, {} ReLU units", g.len(), g.piecewise_units()?);
    Ok(())
}
