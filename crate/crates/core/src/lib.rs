//! Advection dynamics on directed graphs and Gaussian process regression
//! built from the advection operator's spectrum.
//!
//! The library has four layers:
//!
//! - [`graph`]: weighted directed graphs, the advection operator
//!   `L_adv = D_out - A_in` and its consensus counterpart, and generators
//!   for the named graph families (upwind/central/LUD lines, loops,
//!   merging lanes, stars, complete graphs).
//! - [`dynamics`]: a fixed-step fifth-order Runge-Kutta integrator for
//!   `du/dt = -L_adv u`, mass-conservation checks, and order-of-accuracy
//!   studies on periodic lines.
//! - [`kernel`] and [`gp`]: a Matérn covariance assembled from the thin SVD
//!   of the operator, with prior sampling, marginal-likelihood training,
//!   and posterior prediction over graph nodes.
//! - [`experiment`] and [`io`]: synthetic traffic data, end-to-end
//!   regression runs, and CSV/JSON import/export.
//!
//! See the `examples/` directory for a runnable tour of each capability,
//! and the `advection-gp` binary for the command-line interface.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod graph;
pub mod io;
pub mod kernel;

pub use error::{Error, Result};
