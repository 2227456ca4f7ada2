//! Interior-penalty discontinuous Galerkin discretisation of the semilinear
//! problem `-Δu + |u|^{p-2} u = f` on polygonal domains with homogeneous
//! Dirichlet data.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the whole
//! numerical pipeline:
//!
//! - [`mesh`]: conforming triangulations, criss-cross meshes and newest
//!   vertex bisection,
//! - [`quadrature`], [`basis`], [`space`]: broken polynomial spaces with an
//!   orthonormal modal basis,
//! - [`forms`]: assembly of the symmetric interior penalty form, the
//!   semilinear term, residual and Jacobian,
//! - [`solver`]: damped Newton with continuation in the exponent and a
//!   block-Jacobi preconditioned conjugate gradient inner solve,
//! - [`analysis`]: energy, `L^p` and quasinorm error measures and the
//!   nodal-averaging conforming reconstruction,
//! - [`estimator`]: the residual/jump a posteriori estimator,
//! - [`adapt`]: the solve/estimate/mark/refine loop,
//! - [`harness`]: manufactured solutions, rate tables and experiment drivers.
//!
//! File formats, plotting and the command line live in the `dgsemi` crate.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` guards deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod adapt;
pub mod analysis;
pub mod basis;
pub mod dense;
pub mod error;
pub mod estimator;
pub mod forms;
pub mod harness;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;

pub use error::{Error, MeshError};
pub use forms::{ExactSolution, ProblemSpec, ScalarField};
pub use mesh::{Mesh, MeshSizeField};
pub use space::{DGFunction, DGSpace};
