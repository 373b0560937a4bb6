//! Command-line interface: one subcommand per pipeline stage, emitting
//! plot-ready CSV/JSON. Data goes to the path named by `--out`; a replayable
//! metadata block (subcommand, flags, wall time) goes to stdout.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use advection_gp::dynamics::{
    self, InitialCondition, IntegrationConfig, StateVector, StencilScheme,
};
use advection_gp::experiment::{self, SyntheticTrafficConfig};
use advection_gp::gp;
use advection_gp::graph::{self, GraphFamily, OperatorKind};
use advection_gp::io::{self, HyperparamsRecord};
use advection_gp::kernel::{self, MaternHyperparams};
use advection_gp::Error;

#[derive(Parser)]
#[command(name = "advection-gp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyName {
    UpwindLine,
    CentralLine,
    LudLine,
    NonUniformLine,
    Loop,
    Intersection,
    Star,
    Complete,
}

impl FamilyName {
    fn build(self, n: usize, v: f64, dx: f64) -> GraphFamily {
        match self {
            FamilyName::UpwindLine => GraphFamily::UpwindLine { n, v, dx },
            FamilyName::CentralLine => GraphFamily::CentralLine { n, v, dx },
            FamilyName::LudLine => GraphFamily::LudLine { n, v, dx },
            FamilyName::NonUniformLine => GraphFamily::NonUniformLine { n, v, dx },
            FamilyName::Loop => GraphFamily::Loop { n, v, dx },
            FamilyName::Intersection => GraphFamily::Intersection { n, v, dx },
            FamilyName::Star => GraphFamily::Star { n },
            FamilyName::Complete => GraphFamily::Complete { n },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeName {
    UpwindLoop,
    CentralLoop,
    LudLoop,
}

impl From<SchemeName> for StencilScheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::UpwindLoop => StencilScheme::Upwind,
            SchemeName::CentralLoop => StencilScheme::Central,
            SchemeName::LudLoop => StencilScheme::Lud,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum IcName {
    Step,
    Sine,
}

impl From<IcName> for InitialCondition {
    fn from(ic: IcName) -> Self {
        match ic {
            IcName::Step => InitialCondition::Step,
            IcName::Sine => InitialCondition::SmoothSine,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorName {
    Advection,
    Consensus,
}

impl From<OperatorName> for OperatorKind {
    fn from(o: OperatorName) -> Self {
        match o {
            OperatorName::Advection => OperatorKind::Advection,
            OperatorName::Consensus => OperatorKind::Consensus,
        }
    }
}

#[derive(Args)]
struct FamilyArgs {
    /// Graph family to generate
    #[arg(long, value_enum)]
    family: FamilyName,
    /// Node count
    #[arg(long)]
    n: usize,
    /// Advection velocity (line-like families)
    #[arg(long, default_value_t = 1.0)]
    v: f64,
    /// Spatial step (line-like families)
    #[arg(long, default_value_t = 1.0)]
    dx: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a named graph family as an edge-list CSV
    GraphGen {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate du/dt = -L_adv u on a graph and write the trajectory
    Solve {
        /// Edge-list CSV
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        ic: IcName,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convergence study on a periodic line at a sweep of resolutions
    Converge {
        #[arg(long, value_enum)]
        family: SchemeName,
        #[arg(long, value_enum)]
        ic: IcName,
        /// Comma-separated node counts, e.g. 32,64,128,256
        #[arg(long, value_delimiter = ',')]
        resolutions: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw samples from the spectral Matérn prior on a graph
    PriorSample {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit Matérn hyperparameters to observations by likelihood descent
    Fit {
        #[arg(long)]
        graph: PathBuf,
        /// Observations CSV with header node,speed_mph
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Posterior mean and variance over all nodes from fitted hyperparameters
    Predict {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// JSON file produced by `fit`
        #[arg(long)]
        hyperparams: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// End-to-end synthetic regression experiment (JSON lines output)
    Experiment {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, value_enum)]
        operator: OperatorName,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        budget: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate and load a sensor graph/data pair
    Ingest {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = false)]
        validate_only: bool,
    },
}

fn emit_metadata(subcommand: &str, flags: serde_json::Value, started: Instant) {
    let meta = json!({
        "subcommand": subcommand,
        "flags": flags,
        "wall_time_secs": started.elapsed().as_secs_f64(),
    });
    println!("{meta}");
}

fn run(cli: Cli) -> advection_gp::Result<()> {
    let started = Instant::now();
    match cli.command {
        Command::GraphGen { family, out } => {
            let spec = family.family.build(family.n, family.v, family.dx);
            let g = graph::generate(spec)?;
            io::write_graph_csv(&out, &g)?;
            emit_metadata(
                "graph-gen",
                json!({"family": spec, "n": family.n, "v": family.v, "dx": family.dx,
                       "out": out}),
                started,
            );
        }
        Command::Solve {
            graph: graph_path,
            ic,
            t_end,
            dt,
            out,
        } => {
            let g = io::read_graph_csv(&graph_path)?;
            let op = g.advection_operator();
            let n = g.node_count();
            let ic_kind: InitialCondition = ic.into();
            let u0 = StateVector::new(
                (0..n)
                    .map(|i| ic_kind.exact(i as f64 / n as f64, 0.0, 1.0))
                    .collect(),
            );
            let cfg = IntegrationConfig::new(dt, t_end)?;
            if let Some(warning) = cfg.cfl_warning() {
                eprintln!("warning: {warning}");
            }
            let trajectory = dynamics::integrate(&op, &u0, &cfg)?;
            io::write_trajectory_csv(&out, &trajectory)?;
            emit_metadata(
                "solve",
                json!({"graph": graph_path, "ic": ic_kind, "t_end": t_end, "dt": dt,
                       "out": out}),
                started,
            );
        }
        Command::Converge {
            family,
            ic,
            resolutions,
            t_end,
            out,
        } => {
            let scheme: StencilScheme = family.into();
            let ic_kind: InitialCondition = ic.into();
            let report = dynamics::convergence_study(scheme, ic_kind, &resolutions, t_end)?;
            io::write_convergence_csv(&out, &report)?;
            emit_metadata(
                "converge",
                json!({"family": scheme, "ic": ic_kind, "resolutions": resolutions,
                       "t_end": t_end, "slope": report.fitted_slope, "out": out}),
                started,
            );
        }
        Command::PriorSample {
            graph: graph_path,
            nu,
            kappa,
            scale,
            count,
            seed,
            out,
        } => {
            let g = io::read_graph_csv(&graph_path)?;
            let f = kernel::thin_svd(&g.advection_operator())?;
            let h = MaternHyperparams::new(nu, kappa, scale, 0.0)?;
            let k = kernel::matern_kernel(&f, &h);
            let samples = gp::prior_sample(&k, count, seed)?;
            io::write_samples_csv(&out, &samples)?;
            emit_metadata(
                "prior-sample",
                json!({"graph": graph_path, "nu": nu, "kappa": kappa, "scale": scale,
                       "count": count, "seed": seed, "out": out}),
                started,
            );
        }
        Command::Fit {
            graph: graph_path,
            data,
            budget,
            seed,
            out,
        } => {
            let (g, obs) = experiment::ingest_sensor_csv(&graph_path, &data)?;
            let f = kernel::thin_svd(&g.advection_operator())?;
            let init = gp::default_init(obs.targets());
            let fitted = gp::fit_hyperparameters(&f, &obs, &init, budget)?;
            let posterior = gp::posterior_predict(&f, &fitted, &obs)?;
            io::write_hyperparams_json(&out, &HyperparamsRecord::new(&fitted, posterior.final_nll))?;
            emit_metadata(
                "fit",
                json!({"graph": graph_path, "data": data, "budget": budget, "seed": seed,
                       "out": out}),
                started,
            );
        }
        Command::Predict {
            graph: graph_path,
            data,
            hyperparams,
            out,
        } => {
            let (g, obs) = experiment::ingest_sensor_csv(&graph_path, &data)?;
            let record = io::read_hyperparams_json(&hyperparams)?;
            let h = record.hyperparams()?;
            let f = kernel::thin_svd(&g.advection_operator())?;
            let posterior = gp::posterior_predict(&f, &h, &obs)?;
            io::write_posterior_csv(&out, &posterior)?;
            emit_metadata(
                "predict",
                json!({"graph": graph_path, "data": data, "hyperparams": hyperparams,
                       "out": out}),
                started,
            );
        }
        Command::Experiment {
            family,
            operator,
            seed,
            budget,
            out,
        } => {
            let spec = family.family.build(family.n, family.v, family.dx);
            let cfg = SyntheticTrafficConfig::new(spec, seed)?;
            let result =
                experiment::run_regression_experiment(&cfg, operator.into(), budget, seed)?;
            let line = serde_json::to_string(&result).expect("result serializes");
            std::fs::write(&out, format!("{line}\n"))?;
            emit_metadata(
                "experiment",
                json!({"family": spec, "n": family.n, "operator": result.operator_kind,
                       "seed": seed, "budget": budget, "l2_error": result.l2_error,
                       "out": out}),
                started,
            );
        }
        Command::Ingest {
            graph: graph_path,
            data,
            validate_only,
        } => {
            let (g, obs) = experiment::ingest_sensor_csv(&graph_path, &data)?;
            emit_metadata(
                "ingest",
                json!({"graph": graph_path, "data": data, "validate_only": validate_only,
                       "nodes": g.node_count(), "edges": g.edges().len(),
                       "observations": obs.len()}),
                started,
            );
        }
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ConvergenceFailure
        | Error::FactorizationFailure
        | Error::SingularCovariance { .. }
        | Error::NonFiniteState { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap already formats usage; keep help/version on stdout with exit 0
            if e.kind() == clap::error::ErrorKind::DisplayHelp
                || e.kind() == clap::error::ErrorKind::DisplayVersion
            {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
