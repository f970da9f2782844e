//! Spectral Monte Carlo laboratory for the randomly forced complex
//! Ginzburg-Landau equation on an interval with Dirichlet conditions.
//!
//! The crate simulates the Galerkin-truncated system, evaluates the energy
//! functionals together with their Itô decompositions, computes pathwise
//! local times of scalar semimartingales, and estimates stationary
//! statistics (energy balance, densities, small-ball probabilities) as the
//! viscosity is sent to zero. The `book/` directory of the repository holds
//! a narrative guide whose snippets are compiled as doc-tests of this crate.

pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod harness;
pub mod local_time;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book;
