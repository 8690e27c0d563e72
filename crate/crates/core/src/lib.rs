//! Model order reduction with time-dependent transformed modes.
//!
//! The crate covers the whole pipeline for transport-dominated 1-D problems:
//! finite-difference full-order models, POD and shifted POD decompositions,
//! reduced models whose modes travel along a path `p(t)`, error bounds, and
//! the experiment recipes driven by the `tramor` command line tool.
//!
//! Everything numeric is generic over [`Real`] (implemented for `f32` and
//! `f64`). The aliases below fix the scalar to `f64`, which is what the
//! recipes use.

pub mod analysis;
mod error;
pub mod experiments;
pub mod fom;
pub mod linalg;
pub mod numerics;
pub mod offline;
mod real;
pub mod rom;

pub use error::{Error, Result};
pub use real::Real;

/// Version of this library, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Grid = numerics::Grid<f64>;
pub type GridFunction = numerics::GridFunction<f64>;
pub type DiffOp = numerics::DiffOp<f64>;
pub type TransformFamily = numerics::TransformFamily<f64>;
pub type FomModel = fom::FomModel<f64>;
pub type SnapshotSet = fom::SnapshotSet<f64>;
pub type Decomposition = offline::Decomposition<f64>;
pub type RomSystem = rom::RomSystem<f64>;
pub type RomTrajectory = rom::RomTrajectory<f64>;
