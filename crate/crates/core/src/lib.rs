//! Non-autonomous delayed reaction-diffusion systems on an interval.
//!
//! The crate integrates quasimonotone parabolic systems with a unit delay
//! driven by a torus translation flow, linearizes them along trajectories,
//! estimates principal spectra from Lyapunov exponents and turns the
//! block-triangular structure of the interaction matrix into a persistence
//! verdict.

pub mod config;
pub mod error;
pub mod harness;
pub mod model;
pub mod pipeline;
pub mod solver;
pub mod spectrum;
pub mod structure;
pub mod variational;

pub use error::{PfdeError, Result};
