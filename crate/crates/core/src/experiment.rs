//! Synthetic traffic data generation, train/test splitting, the end-to-end
//! regression experiments, and sensor-CSV ingestion.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gp::{self, TrainingData};
use crate::graph::{self, DirectedGraph, GraphFamily, OperatorKind};
use crate::kernel::{thin_svd, MaternHyperparams};

/// Configuration for the synthetic road-speed generator: slow traffic
/// (dense cars) on the first half of the node ordering, fast traffic on the
/// second half, a smooth ramp over the middle tenth, and additive Gaussian
/// noise.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SyntheticTrafficConfig {
    pub family: GraphFamily,
    pub high_speed: f64,
    pub low_speed: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl SyntheticTrafficConfig {
    /// Defaults: 15 mph on the congested half, 65 mph on the free half,
    /// 1 mph of observation noise.
    pub fn new(family: GraphFamily, seed: u64) -> Result<Self> {
        Self::with_speeds(family, 65.0, 15.0, 1.0, seed)
    }

    pub fn with_speeds(
        family: GraphFamily,
        high_speed: f64,
        low_speed: f64,
        noise_std: f64,
        seed: u64,
    ) -> Result<Self> {
        if family.node_count() < 10 {
            return Err(Error::InvalidExperimentConfig(format!(
                "need at least 10 nodes, got {}",
                family.node_count()
            )));
        }
        if !(high_speed > 0.0 && low_speed > 0.0) {
            return Err(Error::InvalidExperimentConfig(
                "speeds must be positive".into(),
            ));
        }
        if noise_std < 0.0 {
            return Err(Error::InvalidExperimentConfig(
                "noise_std must be nonnegative".into(),
            ));
        }
        Ok(Self {
            family,
            high_speed,
            low_speed,
            noise_std,
            seed,
        })
    }

    pub fn node_count(&self) -> usize {
        self.family.node_count()
    }
}

/// One full regression run. `wall_time_secs` is informational and excluded
/// from serialization so identical inputs produce identical output bytes.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub operator_kind: OperatorKind,
    pub family: GraphFamily,
    pub node_count: usize,
    pub l2_error: f64,
    pub hyperparams: MaternHyperparams,
    pub final_nll: f64,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// Noise-free speed profile at node `i` of `n`: low speed below the middle
/// band, high speed above it, linear ramp strictly between the endpoints
/// inside the band `0.45 n <= i + 0.5 <= 0.55 n`.
fn base_speed(cfg: &SyntheticTrafficConfig, i: usize, n: usize, ramp: &[usize]) -> f64 {
    let pos = i as f64 + 0.5;
    let nf = n as f64;
    if pos < 0.45 * nf {
        cfg.low_speed
    } else if pos > 0.55 * nf {
        cfg.high_speed
    } else {
        let j = ramp.iter().position(|&r| r == i).expect("node in ramp band");
        let t = (j + 1) as f64 / (ramp.len() + 1) as f64;
        cfg.low_speed + t * (cfg.high_speed - cfg.low_speed)
    }
}

/// Generate speeds over all nodes of the family's graph, ordered by node
/// index. Deterministic per seed.
pub fn generate_traffic_data(cfg: &SyntheticTrafficConfig) -> Result<TrainingData> {
    let n = cfg.node_count();
    let nf = n as f64;
    let ramp: Vec<usize> = (0..n)
        .filter(|&i| {
            let pos = i as f64 + 0.5;
            (0.45 * nf..=0.55 * nf).contains(&pos)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.noise_std.max(f64::MIN_POSITIVE)).unwrap();
    let targets: Vec<f64> = (0..n)
        .map(|i| {
            let noise = if cfg.noise_std > 0.0 {
                normal.sample(&mut rng)
            } else {
                0.0
            };
            base_speed(cfg, i, n, &ramp) + noise
        })
        .collect();
    TrainingData::new((0..n).collect(), targets)
}

/// Uniform random partition into train and test sets. Train size is
/// `round(fraction * m)`; both sides must be nonempty.
pub fn holdout_split(
    d: &TrainingData,
    train_fraction: f64,
    seed: u64,
) -> Result<(TrainingData, TrainingData)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::DegenerateSplit(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let m = d.len();
    let train_size = (train_fraction * m as f64).round() as usize;
    if train_size == 0 || train_size == m {
        return Err(Error::DegenerateSplit(format!(
            "fraction {train_fraction} of {m} points leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let pick = |slots: &[usize]| {
        let idx: Vec<usize> = slots.iter().map(|&s| d.node_indices()[s]).collect();
        let y: Vec<f64> = slots.iter().map(|&s| d.targets()[s]).collect();
        TrainingData::new(idx, y)
    };
    Ok((pick(&order[..train_size])?, pick(&order[train_size..])?))
}

/// Full pipeline: graph, operator, thin SVD, synthetic data, 70/30 split,
/// hyperparameter fit, posterior prediction, l2 test error.
pub fn run_regression_experiment(
    cfg: &SyntheticTrafficConfig,
    operator_kind: OperatorKind,
    fit_budget: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    let start = std::time::Instant::now();
    let g = graph::generate(cfg.family)?;
    let op = match operator_kind {
        OperatorKind::Advection => g.advection_operator(),
        OperatorKind::Consensus => g.consensus_operator(),
        OperatorKind::SymmetrizedAverage => {
            return Err(Error::InvalidExperimentConfig(
                "experiments run on the advection or consensus operator".into(),
            ))
        }
    };
    let f = thin_svd(&op)?;
    let data = generate_traffic_data(cfg)?;
    let (train, test) = holdout_split(&data, 0.7, seed)?;
    let init = gp::default_init(train.targets());
    let fitted = gp::fit_hyperparameters(&f, &train, &init, fit_budget)?;
    let posterior = gp::posterior_predict(&f, &fitted, &train)?;
    let l2_error = gp::l2_test_error(&posterior, &test)?;
    Ok(ExperimentResult {
        operator_kind,
        family: cfg.family,
        node_count: cfg.node_count(),
        l2_error,
        hyperparams: fitted,
        final_nll: posterior.final_nll,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Read a graph edge-list CSV and a `node,speed_mph` observation CSV.
/// One reading per node; unknown node ids are rejected.
pub fn ingest_sensor_csv(
    graph_file: &Path,
    data_file: &Path,
) -> Result<(DirectedGraph, TrainingData)> {
    let g = crate::io::read_graph_csv(graph_file)?;
    let obs = crate::io::read_observations_csv(data_file)?;
    if obs.is_empty() {
        return Err(Error::EmptyData(data_file.display().to_string()));
    }
    let mut seen = std::collections::HashSet::new();
    let mut indices = Vec::with_capacity(obs.len());
    let mut speeds = Vec::with_capacity(obs.len());
    for (node, speed) in obs {
        if node >= g.node_count() {
            return Err(Error::UnknownNode {
                index: node,
                node_count: g.node_count(),
            });
        }
        if !seen.insert(node) {
            return Err(Error::ParseError {
                file: data_file.display().to_string(),
                message: format!("node {node} observed more than once"),
            });
        }
        indices.push(node);
        speeds.push(speed);
    }
    let data = TrainingData::new(indices, speeds)?;
    Ok((g, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn line_cfg(n: usize, noise: f64, seed: u64) -> SyntheticTrafficConfig {
        SyntheticTrafficConfig::with_speeds(
            GraphFamily::UpwindLine {
                n,
                v: 1.0,
                dx: 1.0 / (n as f64 - 1.0),
            },
            65.0,
            15.0,
            noise,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn traffic_profile_noise_free_n10() {
        let d = generate_traffic_data(&line_cfg(10, 0.0, 0)).unwrap();
        let y = d.targets();
        for i in 0..4 {
            assert_eq!(y[i], 15.0, "node {i}");
        }
        for i in 6..10 {
            assert_eq!(y[i], 65.0, "node {i}");
        }
        // two ramp nodes strictly between the plateaus, increasing
        assert!(y[4] > 15.0 && y[4] < 65.0);
        assert!(y[5] > y[4] && y[5] < 65.0);
    }

    #[test]
    fn traffic_data_is_deterministic() {
        let a = generate_traffic_data(&line_cfg(30, 1.0, 5)).unwrap();
        let b = generate_traffic_data(&line_cfg(30, 1.0, 5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn denser_half_is_slower_half() {
        let d = generate_traffic_data(&line_cfg(40, 0.0, 0)).unwrap();
        let y = d.targets();
        assert!(y[0] < y[39]);
    }

    #[test]
    fn config_validation() {
        assert!(SyntheticTrafficConfig::new(
            GraphFamily::UpwindLine {
                n: 5,
                v: 1.0,
                dx: 1.0
            },
            0
        )
        .is_err());
    }

    #[test]
    fn holdout_split_sizes_and_partition() {
        let d = TrainingData::new((0..10).collect(), (0..10).map(|i| i as f64).collect()).unwrap();
        let (train, test) = holdout_split(&d, 0.7, 3).unwrap();
        assert_eq!(train.len(), 7);
        assert_eq!(test.len(), 3);
        let mut all: Vec<usize> = train
            .node_indices()
            .iter()
            .chain(test.node_indices())
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn holdout_split_degenerate() {
        let d = TrainingData::new(vec![0, 1], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            holdout_split(&d, 0.999, 0),
            Err(Error::DegenerateSplit(_))
        ));
    }

    #[test]
    fn holdout_split_is_deterministic() {
        let d = TrainingData::new((0..20).collect(), vec![1.0; 20]).unwrap();
        let a = holdout_split(&d, 0.7, 11).unwrap();
        let b = holdout_split(&d, 0.7, 11).unwrap();
        assert_eq!(a.0.node_indices(), b.0.node_indices());
        assert_eq!(a.1.node_indices(), b.1.node_indices());
    }

    #[test]
    fn loop_experiment_advection_equals_consensus() {
        let cfg = SyntheticTrafficConfig::new(
            GraphFamily::Loop {
                n: 40,
                v: 1.0,
                dx: 1.0 / 40.0,
            },
            7,
        )
        .unwrap();
        let adv = run_regression_experiment(&cfg, OperatorKind::Advection, 20, 13).unwrap();
        let cons = run_regression_experiment(&cfg, OperatorKind::Consensus, 20, 13).unwrap();
        assert_eq!(adv.l2_error, cons.l2_error);
        assert_eq!(adv.hyperparams, cons.hyperparams);
    }

    #[test]
    fn experiment_serialization_is_deterministic() {
        let cfg = line_cfg(30, 1.0, 2);
        let a = run_regression_experiment(&cfg, OperatorKind::Advection, 10, 5).unwrap();
        let b = run_regression_experiment(&cfg, OperatorKind::Advection, 10, 5).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn ingest_sensor_csv_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let graph_path = dir.path().join("graph.csv");
        let data_path = dir.path().join("data.csv");
        let mut f = std::fs::File::create(&graph_path).unwrap();
        writeln!(f, "source,target,weight\n0,1,1.0\n1,2,1.0").unwrap();
        let mut f = std::fs::File::create(&data_path).unwrap();
        writeln!(f, "node,speed_mph\n0,55.0\n2,42.5").unwrap();
        let (g, d) = ingest_sensor_csv(&graph_path, &data_path).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(d.len(), 2);
        assert_eq!(d.targets()[1], 42.5);

        let mut f = std::fs::File::create(&data_path).unwrap();
        writeln!(f, "node,speed_mph\n99,55.0").unwrap();
        assert!(matches!(
            ingest_sensor_csv(&graph_path, &data_path),
            Err(Error::UnknownNode { .. })
        ));

        let mut f = std::fs::File::create(&data_path).unwrap();
        writeln!(f, "node,speed_mph\n0,55.0\n0,56.0").unwrap();
        assert!(matches!(
            ingest_sensor_csv(&graph_path, &data_path),
            Err(Error::ParseError { .. })
        ));

        let mut f = std::fs::File::create(&data_path).unwrap();
        writeln!(f, "node,speed_mph").unwrap();
        assert!(matches!(
            ingest_sensor_csv(&graph_path, &data_path),
            Err(Error::EmptyData(_))
        ));
    }
}
