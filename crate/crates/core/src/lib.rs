//! Limiting spectra of H = H0 + sum_a tau_a Y_a Y_a^* for isotropic
//! log-concave vectors Y_a.
//!
//! The [`solver`] computes the limit by solving the self-consistent equation
//! for its Stieltjes transform; [`ensemble`] samples finite matrices and
//! [`verify`] runs the Monte Carlo checks that tie the two together.

pub mod eigen;
pub mod ensemble;
pub mod error;
pub mod measures;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
