//! Directed last passage percolation with macroscopically inhomogeneous
//! weights, and the Hamilton-Jacobi equation that governs its continuum
//! limit.
//!
//! * [`weight_field`]: mean/variance fields and presets.
//! * [`lattice_sim`]: weight sampling, last passage times, optimal paths.
//! * [`hjb_solver`]: monotone sweep for the continuum value function.
//! * [`curve_extract`]: near-optimal maximizing curves and their energy.
//! * [`tasep_bridge`]: height functions, densities, slow-bond experiment.
//! * [`analysis`]: level sets, error metrics, convergence tables.
//! * [`io`]: CSV / binary / NDJSON export.

pub mod analysis;
pub mod curve_extract;
pub mod error;
pub mod exec;
pub mod grid;
pub mod hjb_solver;
pub mod io;
pub mod lattice_sim;
pub mod rng;
pub mod tasep_bridge;
pub mod weight_field;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use exec::Exec;
pub use grid::{GridKind, ValueGrid};
pub use weight_field::{preset, DistributionFamily, WeightField};
