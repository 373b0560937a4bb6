//! Empirical spatial convergence orders for the periodic line stencils,
//! recovered as log-log slopes of the L2 error against a smooth exact
//! solution.
//!
//! Run with: `cargo run --release --example convergence`

use advection_gp::dynamics::{convergence_study, InitialCondition, StencilScheme};

fn main() -> advection_gp::Result<()> {
    let resolutions = [40, 80, 160, 320];
    let cases = [
        (StencilScheme::Upwind, "upwind", 1.0),
        (StencilScheme::Central, "central", 2.0),
        (StencilScheme::Lud, "LUD", 2.0),
    ];

    println!("sine initial condition, v = 1, CFL = 0.5, t_end = 0.5\n");
    for (scheme, name, expected) in cases {
        let report = convergence_study(scheme, InitialCondition::SmoothSine, &resolutions, 0.5)?;
        println!("{name} (expected order {expected}):");
        for (n, err) in report.resolutions.iter().zip(&report.errors) {
            println!("  n = {n:4}   L2 error = {err:.3e}");
        }
        println!("  fitted slope = {:.3}\n", report.fitted_slope);
    }
    Ok(())
}
