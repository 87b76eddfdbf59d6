//! Equilibrium fluctuations of a hard-sphere gas in the Boltzmann-Grad limit.
//!
//! The crate is organised around the pieces needed to compare the space-time
//! covariance of the particle fluctuation field with the linearized Boltzmann
//! semigroup:
//!
//! - [`geometry`] and [`maxwell`]: torus geometry, Maxwellian, hard-sphere scattering.
//! - [`ensemble`]: grand-canonical Gibbs sampling under Boltzmann-Grad scaling.
//! - [`dynamics`]: exact event-driven flow, collision graphs, clusters and conditionings.
//! - [`pseudo`]: forward pseudotrajectories, the development functional and
//!   backward collision trees.
//! - [`linearized`]: the linearized collision operator and two independent
//!   evaluations of its semigroup.
//! - [`harness`]: fluctuation fields, covariance estimation, experiments and reports.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ensemble;
mod error;
pub mod geometry;
pub mod harness;
pub mod linearized;
pub mod maxwell;
pub mod par;
pub mod pseudo;
pub mod rng;
pub mod stats;
pub mod test_function;

pub use error::{Error, Result};
pub use geometry::{Dim, Particle, Vector};
