//! Pseudo-spectral solver for local and non-local capillary compressible
//! Navier-Stokes models on periodic domains, with a Littlewood-Paley analyzer
//! for homogeneous Besov norms and a harness for convergence-rate sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::redundant_guards)]

pub mod certify;
pub mod commands;
pub mod config;
pub mod convergence;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod lp;
pub mod plots;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{make_grid, Grid, RealField, SpectralField, VectorField};
pub use kernels::{CapillaryModel, Potential};
pub use lp::{build_partition, BlockDecomposition, DyadicPartition};
pub use solver::{ModelConfig, PhysParams, PressureLaw, State, StepperConfig, Trajectory};
