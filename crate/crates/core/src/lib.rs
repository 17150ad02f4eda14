//! Entropy stable nodal discontinuous Galerkin solver for ideal special
//! relativistic magnetohydrodynamics on uniform Cartesian meshes.

// `!(x > 0.0)` is used on purpose so that NaN fails every admissibility test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod fluxes;
pub mod io;
pub mod limiters;
pub mod physics;
pub mod problems;
pub mod sbp;
pub mod solver;

pub use error::{Error, Result};
