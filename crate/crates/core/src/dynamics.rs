//! Time integration of the semi-discrete advection system `du/dt = -L u`
//! and the order-of-accuracy studies on periodic line graphs.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, DirectedGraph, Edge, GraphFamily, LinearOperator};

/// Node concentrations at a point in time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub values: DVector<f64>,
    pub time: f64,
}

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values: DVector::from_vec(values),
            time: 0.0,
        }
    }
}

/// Fixed-step integration settings.
///
/// The CFL ratio `|v dt / dx|` is advisory for this solver: it is computed
/// and surfaced through [`IntegrationConfig::cfl_warning`] when the velocity
/// and spatial step are known, but never rejected.
#[derive(Debug, Clone, Copy)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_end: f64,
    cfl_ratio: Option<f64>,
}

impl IntegrationConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidIntegrationConfig(format!(
                "dt must be positive and finite, got {dt}"
            )));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidIntegrationConfig(format!(
                "t_end must be positive and finite, got {t_end}"
            )));
        }
        if dt > t_end {
            return Err(Error::InvalidIntegrationConfig(format!(
                "dt = {dt} exceeds t_end = {t_end}"
            )));
        }
        Ok(Self {
            dt,
            t_end,
            cfl_ratio: None,
        })
    }

    /// Record the advection velocity and spatial step so the CFL ratio can
    /// be reported.
    pub fn with_cfl_context(mut self, v: f64, dx: f64) -> Self {
        self.cfl_ratio = Some((v * self.dt / dx).abs());
        self
    }

    pub fn cfl_ratio(&self) -> Option<f64> {
        self.cfl_ratio
    }

    pub fn cfl_warning(&self) -> Option<String> {
        match self.cfl_ratio {
            Some(r) if r > 1.0 => Some(format!(
                "CFL ratio |v dt/dx| = {r:.3} exceeds 1; the fixed-step solver may be unstable"
            )),
            _ => None,
        }
    }
}

/// Right-hand side of the advection dynamics: `-L u`.
pub fn advection_rhs(op: &LinearOperator, u: &StateVector) -> Result<DVector<f64>> {
    if u.values.len() != op.node_count() {
        return Err(Error::DimensionMismatch {
            expected: op.node_count(),
            got: u.values.len(),
        });
    }
    Ok(-(op.matrix() * &u.values))
}

/// Total mass `sum_i u_i`; conserved exactly by the advection operator since
/// its columns sum to zero.
pub fn total_mass(u: &StateVector) -> f64 {
    u.values.sum()
}

// Dormand-Prince fifth-order solution weights, fixed step.
const A: [[f64; 5]; 5] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];

fn rk5_step(op: &LinearOperator, u: &DVector<f64>, dt: f64) -> DVector<f64> {
    let f = |x: &DVector<f64>| -(op.matrix() * x);
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(6);
    k.push(f(u));
    for s in 0..5 {
        let mut y = u.clone();
        for (j, kj) in k.iter().enumerate() {
            let a = A[s][j];
            if a != 0.0 {
                y.axpy(dt * a, kj, 1.0);
            }
        }
        k.push(f(&y));
    }
    let mut next = u.clone();
    for (j, kj) in k.iter().enumerate() {
        if B[j] != 0.0 {
            next.axpy(dt * B[j], kj, 1.0);
        }
    }
    next
}

/// Integrate `du/dt = -L u` from `t = 0` to `t_end` with a fixed-step
/// fifth-order Runge-Kutta scheme. Returns the trajectory at every accepted
/// step, starting at the initial state; the last step is shortened so the
/// final state lands exactly at `t_end`.
pub fn integrate(
    op: &LinearOperator,
    u0: &StateVector,
    cfg: &IntegrationConfig,
) -> Result<Vec<StateVector>> {
    if u0.values.len() != op.node_count() {
        return Err(Error::DimensionMismatch {
            expected: op.node_count(),
            got: u0.values.len(),
        });
    }
    let mut trajectory = vec![StateVector {
        values: u0.values.clone(),
        time: 0.0,
    }];
    let mut u = u0.values.clone();
    let mut t = 0.0;
    while t < cfg.t_end {
        let dt = cfg.dt.min(cfg.t_end - t);
        u = rk5_step(op, &u, dt);
        t = if cfg.t_end - t <= cfg.dt { cfg.t_end } else { t + dt };
        if let Some((index, &value)) = u.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFiniteState {
                time: t,
                index,
                value,
            });
        }
        trajectory.push(StateVector {
            values: u.clone(),
            time: t,
        });
    }
    Ok(trajectory)
}

/// Exact solution of the 1D advection equation for a step initial profile:
/// `left_value` to the left of the advected jump, zero to the right, with the
/// inflow boundary held at `left_value`.
pub fn exact_step_solution(
    x: &[f64],
    t: f64,
    v: f64,
    left_value: f64,
    jump_position: f64,
) -> Vec<f64> {
    let front = jump_position + v * t;
    x.iter()
        .map(|&xi| if xi < front { left_value } else { 0.0 })
        .collect()
}

/// Finite difference stencil realized by a periodic line graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StencilScheme {
    /// First-order upwind (the plain loop graph).
    Upwind,
    /// Second-order central difference.
    Central,
    /// Second-order linear upwind differencing.
    Lud,
}

/// Initial condition for the convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCondition {
    /// 0.7 on the left half of the domain, 0 on the right.
    Step,
    /// `sin(2 pi x)`; smooth and periodic, so the measured slope reflects
    /// the spatial order cleanly.
    SmoothSine,
}

impl InitialCondition {
    /// The exact periodic solution at time `t` on the unit domain.
    pub fn exact(&self, x: f64, t: f64, v: f64) -> f64 {
        let xi = (x - v * t).rem_euclid(1.0);
        match self {
            InitialCondition::SmoothSine => (2.0 * std::f64::consts::PI * xi).sin(),
            InitialCondition::Step => {
                if xi < 0.5 {
                    0.7
                } else {
                    0.0
                }
            }
        }
    }
}

/// Close a line stencil periodically: every node gets the full interior
/// stencil with indices taken modulo `n`. The result is balanced.
pub fn periodic_line(scheme: StencilScheme, n: usize, v: f64, dx: f64) -> Result<DirectedGraph> {
    if n < 3 {
        return Err(Error::InvalidFamilyParams(format!(
            "periodic lines need n >= 3, got {n}"
        )));
    }
    let edge = |source, target, weight| Edge {
        source,
        target,
        weight,
    };
    let edges = match scheme {
        StencilScheme::Upwind => {
            return graph::generate(GraphFamily::Loop { n, v, dx });
        }
        StencilScheme::Central => {
            let w = v / (2.0 * dx);
            let mut edges = Vec::with_capacity(2 * n);
            for i in 0..n {
                edges.push(edge(i, (i + 1) % n, w));
                edges.push(edge((i + 1) % n, i, -w));
            }
            edges
        }
        StencilScheme::Lud => {
            let mut edges = Vec::with_capacity(2 * n);
            for i in 0..n {
                edges.push(edge(i, (i + 1) % n, 2.0 * v / dx));
                edges.push(edge(i, (i + 2) % n, -v / (2.0 * dx)));
            }
            edges
        }
    };
    DirectedGraph::from_edge_list(edges, n)
}

/// Errors against the exact solution at a sweep of resolutions, plus the
/// fitted log-log slope of error versus spatial step.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub scheme: StencilScheme,
    pub initial_condition: InitialCondition,
    pub resolutions: Vec<usize>,
    pub errors: Vec<f64>,
    pub fitted_slope: f64,
}

/// Least-squares slope of `log(err)` against `log(dx)`; positive slopes mean
/// the error shrinks with refinement at that order.
fn loglog_slope(dx: &[f64], err: &[f64]) -> f64 {
    let n = dx.len() as f64;
    let lx: Vec<f64> = dx.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

/// Run the advection dynamics on periodic line graphs of increasing
/// resolution, measure the discrete L2 error `sqrt(sum (u_i - u_exact)^2 dx)`
/// against the translated exact solution at `t_end`, and fit the order.
///
/// The time step satisfies a CFL ratio of 0.5, so the fifth-order temporal
/// error is negligible against the first/second-order spatial error.
pub fn convergence_study(
    scheme: StencilScheme,
    ic: InitialCondition,
    resolutions: &[usize],
    t_end: f64,
) -> Result<ConvergenceReport> {
    if resolutions.len() < 3 {
        return Err(Error::InvalidResolutionList(format!(
            "need at least 3 resolutions, got {}",
            resolutions.len()
        )));
    }
    if resolutions.iter().any(|&n| n < 3) {
        return Err(Error::InvalidResolutionList(
            "all resolutions must be >= 3".into(),
        ));
    }
    let v = 1.0;
    let mut errors = Vec::with_capacity(resolutions.len());
    let mut steps = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let dx = 1.0 / n as f64;
        let g = periodic_line(scheme, n, v, dx)?;
        let op = g.advection_operator();
        let x: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();
        let u0 = StateVector::new(x.iter().map(|&xi| ic.exact(xi, 0.0, v)).collect());
        let dt = 0.5 * dx / v.abs();
        let cfg = IntegrationConfig::new(dt, t_end)?.with_cfl_context(v, dx);
        let trajectory = integrate(&op, &u0, &cfg)?;
        let last = trajectory.last().expect("trajectory is nonempty");
        let err: f64 = x
            .iter()
            .zip(last.values.iter())
            .map(|(&xi, &ui)| (ui - ic.exact(xi, t_end, v)).powi(2) * dx)
            .sum::<f64>()
            .sqrt();
        errors.push(err);
        steps.push(dx);
    }
    let fitted_slope = loglog_slope(&steps, &errors);
    Ok(ConvergenceReport {
        scheme,
        initial_condition: ic,
        resolutions: resolutions.to_vec(),
        errors,
        fitted_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphFamily};
    use approx::assert_abs_diff_eq;

    fn upwind3() -> LinearOperator {
        generate(GraphFamily::UpwindLine {
            n: 3,
            v: 1.0,
            dx: 1.0,
        })
        .unwrap()
        .advection_operator()
    }

    #[test]
    fn rhs_upwind_example() {
        let op = upwind3();
        let u = StateVector::new(vec![1.0, 0.0, 0.0]);
        let r = advection_rhs(&op, &u).unwrap();
        assert_eq!(r.as_slice(), &[-1.0, 1.0, 0.0]);
    }

    #[test]
    fn rhs_zero_vector() {
        let op = upwind3();
        let u = StateVector::new(vec![0.0; 3]);
        assert_eq!(advection_rhs(&op, &u).unwrap().as_slice(), &[0.0; 3]);
    }

    #[test]
    fn rhs_constant_on_loop_is_zero() {
        let op = generate(GraphFamily::Loop {
            n: 6,
            v: 1.0,
            dx: 1.0,
        })
        .unwrap()
        .advection_operator();
        let u = StateVector::new(vec![3.7; 6]);
        let r = advection_rhs(&op, &u).unwrap();
        for x in r.iter() {
            assert_abs_diff_eq!(*x, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn rhs_dimension_mismatch() {
        let op = upwind3();
        let u = StateVector::new(vec![1.0, 2.0]);
        assert!(matches!(
            advection_rhs(&op, &u),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn integrate_zero_stays_zero() {
        let op = upwind3();
        let u0 = StateVector::new(vec![0.0; 3]);
        let cfg = IntegrationConfig::new(0.1, 1.0).unwrap();
        let traj = integrate(&op, &u0, &cfg).unwrap();
        assert!(traj.iter().all(|s| s.values.iter().all(|&x| x == 0.0)));
        assert_abs_diff_eq!(traj.last().unwrap().time, 1.0);
    }

    #[test]
    fn integrate_constant_on_loop_stays_constant() {
        let op = generate(GraphFamily::Loop {
            n: 5,
            v: 1.0,
            dx: 1.0,
        })
        .unwrap()
        .advection_operator();
        let u0 = StateVector::new(vec![0.7; 5]);
        let cfg = IntegrationConfig::new(0.05, 0.5).unwrap();
        let traj = integrate(&op, &u0, &cfg).unwrap();
        for s in &traj {
            for x in s.values.iter() {
                assert_abs_diff_eq!(*x, 0.7, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn integrate_two_node_exponential_decay() {
        // edge (0,1,1): u_0(t) = e^{-t}, u_1(t) = 1 - e^{-t}
        let g = crate::graph::DirectedGraph::from_edge_list(
            vec![Edge {
                source: 0,
                target: 1,
                weight: 1.0,
            }],
            2,
        )
        .unwrap();
        let op = g.advection_operator();
        let u0 = StateVector::new(vec![1.0, 0.0]);
        let cfg = IntegrationConfig::new(0.1, 1.0).unwrap();
        let traj = integrate(&op, &u0, &cfg).unwrap();
        let last = traj.last().unwrap();
        let exact = (-1.0f64).exp();
        assert!((last.values[0] - exact).abs() < 1e-7);
        assert!((last.values[1] - (1.0 - exact)).abs() < 1e-7);
    }

    #[test]
    fn step_profile_translates_right() {
        let n = 100;
        let dx = 1.0 / (n as f64 - 1.0);
        let g = generate(GraphFamily::UpwindLine { n, v: 1.0, dx }).unwrap();
        let op = g.advection_operator();
        let x: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();
        let u0 = StateVector::new(
            x.iter()
                .map(|&xi| if xi < 0.5 { 0.7 } else { 0.0 })
                .collect(),
        );
        let cfg = IntegrationConfig::new(0.5 * dx, 0.25).unwrap();
        let traj = integrate(&op, &u0, &cfg).unwrap();
        let last = traj.last().unwrap();
        // the plateau has moved right: values near x = 0.6 are now close
        // to 0.7, while they started at 0
        let idx = (0.6 / dx) as usize;
        assert!(last.values[idx] > 0.5);
        // well ahead of the front it is still empty
        assert!(last.values[n - 2] < 0.05);
    }

    #[test]
    fn total_mass_examples() {
        assert_abs_diff_eq!(
            total_mass(&StateVector::new(vec![0.7, 0.7, 0.0, 0.0])),
            1.4
        );
        assert_eq!(total_mass(&StateVector::new(vec![0.0; 4])), 0.0);
    }

    #[test]
    fn mass_is_conserved_on_arbitrary_graph() {
        let g = crate::graph::DirectedGraph::from_edge_list(
            vec![
                Edge {
                    source: 0,
                    target: 2,
                    weight: 1.3,
                },
                Edge {
                    source: 2,
                    target: 1,
                    weight: -0.4,
                },
                Edge {
                    source: 1,
                    target: 3,
                    weight: 0.9,
                },
                Edge {
                    source: 3,
                    target: 0,
                    weight: 2.0,
                },
            ],
            4,
        )
        .unwrap();
        let op = g.advection_operator();
        let u0 = StateVector::new(vec![1.0, -0.5, 2.0, 0.25]);
        let m0 = total_mass(&u0);
        let cfg = IntegrationConfig::new(0.01, 1.0).unwrap();
        let traj = integrate(&op, &u0, &cfg).unwrap();
        let mf = total_mass(traj.last().unwrap());
        assert!((mf - m0).abs() <= 1e-8 * m0.abs().max(1.0));
    }

    #[test]
    fn exact_step_solution_examples() {
        let x = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let u = exact_step_solution(&x, 0.0, 1.0, 0.7, 0.5);
        assert_eq!(u, vec![0.7, 0.7, 0.0, 0.0, 0.0]);
        // jump exits the domain
        let u = exact_step_solution(&x, 10.0, 1.0, 0.7, 0.5);
        assert!(u.iter().all(|&v| v == 0.7));
        // v t = 0.25 puts the discontinuity at 0.75
        let u = exact_step_solution(&x, 0.25, 1.0, 0.7, 0.5);
        assert_eq!(u, vec![0.7, 0.7, 0.7, 0.0, 0.0]);
    }

    #[test]
    fn cfl_warning_fires_above_one() {
        let cfg = IntegrationConfig::new(0.5, 1.0)
            .unwrap()
            .with_cfl_context(4.0, 1.0);
        assert!(cfg.cfl_warning().is_some());
        let cfg = IntegrationConfig::new(0.1, 1.0)
            .unwrap()
            .with_cfl_context(1.0, 1.0);
        assert!(cfg.cfl_warning().is_none());
    }

    #[test]
    fn config_validation() {
        assert!(IntegrationConfig::new(0.0, 1.0).is_err());
        assert!(IntegrationConfig::new(2.0, 1.0).is_err());
        assert!(IntegrationConfig::new(0.1, -1.0).is_err());
    }

    #[test]
    fn periodic_lines_are_balanced() {
        for scheme in [StencilScheme::Upwind, StencilScheme::Central, StencilScheme::Lud] {
            let g = periodic_line(scheme, 16, 1.0, 1.0 / 16.0).unwrap();
            assert!(g.is_balanced(1e-10), "{scheme:?} loop should be balanced");
        }
    }

    #[test]
    fn upwind_convergence_slope_near_one() {
        let report = convergence_study(
            StencilScheme::Upwind,
            InitialCondition::SmoothSine,
            &[32, 64, 128, 256],
            0.5,
        )
        .unwrap();
        assert!(
            (0.85..=1.15).contains(&report.fitted_slope),
            "slope = {}",
            report.fitted_slope
        );
    }

    #[test]
    fn lud_convergence_slope_near_two() {
        let report = convergence_study(
            StencilScheme::Lud,
            InitialCondition::SmoothSine,
            &[32, 64, 128, 256],
            0.5,
        )
        .unwrap();
        assert!(
            (1.75..=2.25).contains(&report.fitted_slope),
            "slope = {}",
            report.fitted_slope
        );
    }

    #[test]
    fn convergence_study_is_deterministic() {
        let a = convergence_study(
            StencilScheme::Upwind,
            InitialCondition::Step,
            &[16, 32, 64],
            0.25,
        )
        .unwrap();
        let b = convergence_study(
            StencilScheme::Upwind,
            InitialCondition::Step,
            &[16, 32, 64],
            0.25,
        )
        .unwrap();
        assert_eq!(a.errors, b.errors);
    }

    #[test]
    fn convergence_study_rejects_short_lists() {
        assert!(convergence_study(
            StencilScheme::Upwind,
            InitialCondition::Step,
            &[16, 32],
            0.25
        )
        .is_err());
    }
}
