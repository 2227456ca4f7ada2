//! File formats, plots, experiment drivers and the command line for
//! `dgsemi-core`.
//!
//! - [`mesh_io`], [`dump`]: plain-text meshes and coefficient vectors,
//! - [`rates`]: CSV tables of convergence studies and adaptive runs,
//! - [`plot`]: SVG log-log rate plots,
//! - [`vtk`]: legacy ASCII VTK with solution and estimator fields,
//! - [`experiments`]: the uniform and adaptive studies with their outputs,
//! - [`selftest`]: randomised invariant suites,
//! - [`cli`]: argument parsing and exit codes.

pub mod cli;
pub mod dump;
pub mod error;
pub mod experiments;
pub mod mesh_io;
pub mod plot;
pub mod rates;
pub mod selftest;
pub mod vtk;

pub use error::{Error, Result};
