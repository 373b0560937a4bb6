//! Integrate the advection dynamics du/dt = -L_adv u for a step profile
//! on an upwind line and watch the front travel downstream while total
//! mass stays constant.
//!
//! Run with: `cargo run --example solve_advection`

use advection_gp::dynamics::{integrate, total_mass, IntegrationConfig, StateVector};
use advection_gp::graph::{generate, GraphFamily};

fn main() -> advection_gp::Result<()> {
    let n = 40;
    let dx = 1.0 / n as f64;
    let graph = generate(GraphFamily::Loop { n, v: 1.0, dx })?;
    let operator = graph.advection_operator();

    // step of unit mass in the left quarter of the ring
    let values: Vec<f64> = (0..n).map(|i| if i < n / 4 { 4.0 } else { 0.0 }).collect();
    let initial = StateVector::new(values);
    let mass0 = total_mass(&initial);

    let config = IntegrationConfig::new(0.5 * dx, 0.5)?.with_cfl_context(1.0, dx);
    let trajectory = integrate(&operator, &initial, &config)?;

    println!("upwind loop, n = {n}, dt = {:.4}, t_end = 0.5", 0.5 * dx);
    println!("time    front-node   mass drift");
    for state in trajectory.iter().step_by(8) {
        let front = state
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        println!(
            "{:5.3}   {:10}   {:.2e}",
            state.time,
            front,
            (total_mass(state) - mass0).abs()
        );
    }

    let last = trajectory.last().unwrap();
    println!(
        "\nafter t = {:.2} the peak sits near node {} (pure transport of the step's center predicts {});",
        last.time,
        last.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap(),
        (n / 4 - 1) / 2 + (last.time / dx).round() as usize
    );
    println!("the first-order upwind stencil smears the step but conserves mass exactly.");
    Ok(())
}
