//! Load a road graph and sparse sensor readings from CSV files, fit the
//! graph Matérn GP, and predict speeds at unobserved nodes.
//!
//! Run with: `cargo run --example sensor_ingestion`

use advection_gp::experiment::ingest_sensor_csv;
use advection_gp::gp::{default_init, fit_hyperparameters, posterior_predict};
use advection_gp::graph::{DirectedGraph, Edge};
use advection_gp::io::{write_graph_csv, write_observations_csv};
use advection_gp::kernel::thin_svd;

fn main() -> advection_gp::Result<()> {
    let dir = std::env::temp_dir().join("sensor_ingestion_example");
    std::fs::create_dir_all(&dir)?;
    let graph_file = dir.join("graph.csv");
    let data_file = dir.join("speeds.csv");

    // a short one-way road: 0 -> 1 -> ... -> 7
    let edges = (0..7)
        .map(|i| Edge { source: i, target: i + 1, weight: 1.0 })
        .collect();
    write_graph_csv(&graph_file, &DirectedGraph::from_edge_list(edges, 8)?)?;
    // sensors at every other node
    write_observations_csv(
        &data_file,
        &[(0, 61.0), (2, 58.5), (4, 33.0), (6, 22.0)],
    )?;

    let (graph, data) = ingest_sensor_csv(&graph_file, &data_file)?;
    println!(
        "loaded {} nodes, {} observations from {}",
        graph.node_count(),
        data.len(),
        dir.display()
    );

    let factorization = thin_svd(&graph.advection_operator())?;
    let init = default_init(data.targets());
    let fitted = fit_hyperparameters(&factorization, &data, &init, 60)?;
    println!(
        "fitted: nu = {:.3}, kappa = {:.3}, scale = {:.2}, noise = {:.3}",
        fitted.nu, fitted.kappa, fitted.output_scale, fitted.noise_variance
    );

    let posterior = posterior_predict(&factorization, &fitted, &data)?;
    println!("\nnode   mean    std dev   observed");
    for i in 0..graph.node_count() {
        let observed = data
            .node_indices()
            .iter()
            .position(|&j| j == i)
            .map(|k| format!("{:.1}", data.targets()[k]))
            .unwrap_or_else(|| "-".into());
        println!(
            "{i:>4}  {:>6.2}   {:>6.2}   {observed:>8}",
            posterior.mean[i],
            posterior.variance[i].sqrt()
        );
    }
    Ok(())
}
