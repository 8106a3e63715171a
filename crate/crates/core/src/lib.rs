//! Lateral and roll dynamics of a tractor-semitrailer combination with
//! grey-box parameter identification.
//!
//! The tractor is a single-track model, the semitrailer a two-track model with
//! roll dynamics, linear suspension and a simplified Magic Formula tire with
//! first-order relaxation. The crate covers:
//!
//! - [`params`], [`state`], [`physics`], [`tire`]: parameters, state/input/output
//!   vectors and the closed-form constituent relations;
//! - [`dynamics`]: the implicit system `M(x) x' = f(x, u)`, its solve, RK4
//!   integration and the output map;
//! - [`maneuvers`]: steer/speed profiles for test maneuvers and synthetic
//!   measurement datasets;
//! - [`dataset`] and [`validation`]: the dataset CSV contract, resampling,
//!   RMSE and validation reports;
//! - [`identification`]: output-error cost, particle swarm optimization,
//!   bounded quasi-Newton refinement and multi-restart identification;
//! - [`cli`]: the command-line front end used by the `semitrailer` binary.
//!
//! Runnable examples live in `examples/`; see the README for an index.

pub mod cli;
pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod identification;
pub mod maneuvers;
pub mod params;
pub mod physics;
pub mod state;
pub mod tire;
pub mod validation;

pub use error::{Error, Result};
pub use params::{TireParams, TireSet, VehicleParameters};
pub use state::{InputSample, OutputVector, StateVector};
