//! CSV and JSON readers/writers for graphs, trajectories, convergence
//! reports, kernels, factorizations, posteriors, and hyperparameters.
//!
//! All writers format floats with Rust's shortest round-trip formatting, so
//! identical inputs produce byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ConvergenceReport, StateVector};
use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::graph::{DirectedGraph, Edge};
use crate::kernel::{KernelMatrix, MaternHyperparams, SpectralFactorization};

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::ParseError {
        file: path.display().to_string(),
        message: message.into(),
    }
}

/// Read an edge-list CSV with header `source,target,weight`. The node count
/// is the largest index seen plus one.
pub fn read_graph_csv(path: &Path) -> Result<DirectedGraph> {
    let file = File::open(path)?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["source", "target", "weight"] {
        return Err(parse_err(
            path,
            format!("expected header source,target,weight, got {headers:?}"),
        ));
    }
    let mut edges = Vec::new();
    let mut max_index = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| parse_err(path, format!("short record {record:?}")))
        };
        let source: usize = field(0)?
            .trim()
            .parse()
            .map_err(|e| parse_err(path, format!("bad source: {e}")))?;
        let target: usize = field(1)?
            .trim()
            .parse()
            .map_err(|e| parse_err(path, format!("bad target: {e}")))?;
        let weight: f64 = field(2)?
            .trim()
            .parse()
            .map_err(|e| parse_err(path, format!("bad weight: {e}")))?;
        max_index = max_index.max(source).max(target);
        edges.push(Edge {
            source,
            target,
            weight,
        });
    }
    if edges.is_empty() {
        return Err(parse_err(path, "no edges"));
    }
    DirectedGraph::from_edge_list(edges, max_index + 1)
}

pub fn write_graph_csv(path: &Path, g: &DirectedGraph) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "source,target,weight")?;
    for e in g.edges() {
        writeln!(w, "{},{},{}", e.source, e.target, e.weight)?;
    }
    Ok(())
}

/// Read observations from a CSV with header `node,speed_mph`.
pub fn read_observations_csv(path: &Path) -> Result<Vec<(usize, f64)>> {
    let file = File::open(path)?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["node", "speed_mph"] {
        return Err(parse_err(
            path,
            format!("expected header node,speed_mph, got {headers:?}"),
        ));
    }
    let mut obs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let node: usize = record
            .get(0)
            .ok_or_else(|| parse_err(path, "missing node field"))?
            .trim()
            .parse()
            .map_err(|e| parse_err(path, format!("bad node: {e}")))?;
        let speed: f64 = record
            .get(1)
            .ok_or_else(|| parse_err(path, "missing speed field"))?
            .trim()
            .parse()
            .map_err(|e| parse_err(path, format!("bad speed: {e}")))?;
        obs.push((node, speed));
    }
    Ok(obs)
}

pub fn write_observations_csv(path: &Path, obs: &[(usize, f64)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "node,speed_mph")?;
    for &(node, speed) in obs {
        writeln!(w, "{node},{speed}")?;
    }
    Ok(())
}

/// Trajectory CSV with header `time,node_0,...,node_{n-1}`.
pub fn write_trajectory_csv(path: &Path, trajectory: &[StateVector]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = trajectory.first().map_or(0, |s| s.values.len());
    write!(w, "time")?;
    for i in 0..n {
        write!(w, ",node_{i}")?;
    }
    writeln!(w)?;
    for state in trajectory {
        write!(w, "{}", state.time)?;
        for x in state.values.iter() {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Convergence CSV: `n,error` rows followed by a `# slope=<value>` comment.
pub fn write_convergence_csv(path: &Path, report: &ConvergenceReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "n,error")?;
    for (n, e) in report.resolutions.iter().zip(report.errors.iter()) {
        writeln!(w, "{n},{e}")?;
    }
    writeln!(w, "# slope={}", report.fitted_slope)?;
    Ok(())
}

fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Dense kernel matrix as a plain CSV grid.
pub fn write_kernel_csv(path: &Path, k: &KernelMatrix) -> Result<()> {
    write_matrix_csv(path, k.matrix())
}

/// Factorization as a CSV triplet: `<base>.U.csv`, `<base>.sigma.csv`,
/// `<base>.V.csv`.
pub fn write_factorization_csv(base: &Path, f: &SpectralFactorization) -> Result<()> {
    let with_suffix = |suffix: &str| {
        let mut s = base.as_os_str().to_os_string();
        s.push(suffix);
        std::path::PathBuf::from(s)
    };
    write_matrix_csv(&with_suffix(".U.csv"), f.left_vectors())?;
    let mut w = BufWriter::new(File::create(with_suffix(".sigma.csv"))?);
    for s in f.singular_values().iter() {
        writeln!(w, "{s}")?;
    }
    write_matrix_csv(&with_suffix(".V.csv"), f.right_vectors())
}

/// Posterior CSV with header `node,mean,variance`.
pub fn write_posterior_csv(path: &Path, posterior: &GpPosterior) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "node,mean,variance")?;
    for (i, (m, v)) in posterior
        .mean
        .iter()
        .zip(posterior.variance.iter())
        .enumerate()
    {
        writeln!(w, "{i},{m},{v}")?;
    }
    Ok(())
}

/// Prior/posterior samples CSV: header `node,sample_0,...`, one row per node.
pub fn write_samples_csv(path: &Path, samples: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "node")?;
    for j in 0..samples.len() {
        write!(w, ",sample_{j}")?;
    }
    writeln!(w)?;
    let n = samples.first().map_or(0, |s| s.len());
    for i in 0..n {
        write!(w, "{i}")?;
        for s in samples {
            write!(w, ",{}", s[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Fitted hyperparameters as a JSON object with keys `nu`, `kappa`,
/// `output_scale`, `noise_variance`, `final_nll`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperparamsRecord {
    pub nu: f64,
    pub kappa: f64,
    pub output_scale: f64,
    pub noise_variance: f64,
    pub final_nll: f64,
}

impl HyperparamsRecord {
    pub fn new(h: &MaternHyperparams, final_nll: f64) -> Self {
        Self {
            nu: h.nu,
            kappa: h.kappa,
            output_scale: h.output_scale,
            noise_variance: h.noise_variance,
            final_nll,
        }
    }

    pub fn hyperparams(&self) -> Result<MaternHyperparams> {
        MaternHyperparams::new(self.nu, self.kappa, self.output_scale, self.noise_variance)
    }
}

pub fn write_hyperparams_json(path: &Path, record: &HyperparamsRecord) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let json = serde_json::to_string_pretty(record).expect("record serializes");
    writeln!(w, "{json}")?;
    Ok(())
}

pub fn read_hyperparams_json(path: &Path) -> Result<HyperparamsRecord> {
    let file = File::open(path)?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| parse_err(path, e.to_string()))
}

/// Count the data lines (excluding header and comments) of a CSV; used by
/// the CLI's validate-only mode.
pub fn count_csv_rows(path: &Path) -> Result<usize> {
    let file = File::open(path)?;
    let mut count = 0usize;
    for line in BufReader::new(file).lines().skip(1) {
        let line = line?;
        if !line.trim().is_empty() && !line.starts_with('#') {
            count += 1;
        }
    }
    Ok(count)
}
