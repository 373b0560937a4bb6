//! Build the named graph families and inspect their advection and
//! consensus operators.
//!
//! Run with: `cargo run --example graph_operators`

use advection_gp::graph::{generate, GraphFamily};

fn main() -> advection_gp::Result<()> {
    let families = [
        ("upwind line", GraphFamily::UpwindLine { n: 5, v: 1.0, dx: 1.0 }),
        ("central line", GraphFamily::CentralLine { n: 5, v: 1.0, dx: 1.0 }),
        ("LUD line", GraphFamily::LudLine { n: 5, v: 1.0, dx: 1.0 }),
        ("non-uniform line", GraphFamily::NonUniformLine { n: 5, v: 1.0, dx: 1.0 }),
        ("loop", GraphFamily::Loop { n: 5, v: 1.0, dx: 1.0 }),
        ("intersection", GraphFamily::Intersection { n: 6, v: 1.0, dx: 1.0 }),
        ("star", GraphFamily::Star { n: 5 }),
        ("complete", GraphFamily::Complete { n: 4 }),
    ];

    for (name, family) in families {
        let g = generate(family)?;
        let l_adv = g.advection_operator();
        println!("== {name} ({} nodes, {} edges)", g.node_count(), g.edges().len());
        println!("balanced: {}", g.is_balanced(1e-12));
        println!("L_adv = {:.2}", l_adv.matrix());
        // columns of L_adv always sum to zero: the dynamics conserve mass
        let max_col_sum = (0..g.node_count())
            .map(|j| l_adv.matrix().column(j).sum().abs())
            .fold(0.0f64, f64::max);
        println!("max |column sum| = {max_col_sum:.2e}");
        if g.is_balanced(1e-12) {
            println!("balanced, so L_adv equals L_cons\n");
        } else {
            println!("unbalanced, L_cons differs on the diagonal\n");
        }
    }
    Ok(())
}
