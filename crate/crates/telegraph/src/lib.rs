//! Exact simulation of the Goldstein-Kac telegraph process and closed-form
//! error bounds against its Brownian diffusion limit.
//!
//! The library is organized around five concerns:
//!
//! * [`core_model`] — model parameters, derived scalings and observable specs
//!   shared by everything else.
//! * [`path_samplers`] — exact telegraph path simulation (two switching
//!   variants, asymmetric motion via the Galilean transform) and discretized
//!   Brownian paths.
//! * [`functionals`] — the exponential average-integral observable, evaluated
//!   in closed form on exact paths and by Riemann sums on grids.
//! * [`bounds`] — Wasserstein error bounds, weight second moments, the
//!   telegraph moment generating function and integrability thresholds.
//! * [`mc_engine`] — deterministic parallel Monte Carlo estimation, the
//!   rate-convergence experiment and its log-log regression.
//!
//! [`cli_io`] wraps all of it in a command-line frontend with CSV output.

pub mod bounds;
pub mod cli_io;
pub mod core_model;
pub mod functionals;
pub mod mc_engine;
pub mod path_samplers;

pub use bounds::BoundReport;
pub use core_model::{derive_scalings, MapKind, ModelParams, ObservableSpec, Scalings, SimVariant};
pub use functionals::{exact_exp_avg_integral, exact_functional, grid_functional};
pub use mc_engine::{ExperimentConfig, ExperimentRow, MCEstimate, RegressionFit};
pub use path_samplers::{AsymmetricPath, GridPath, RngStream, TelegraphPath};
