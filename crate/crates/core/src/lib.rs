//! Validity radii for Lyapunov–Schmidt reductions of Hopfield and
//! firing-rate networks near a singular equilibrium.
//!
//! The crate is organised bottom-up: [`linalg`] splits a singular Jacobian
//! into kernel and range bases, [`model`] evaluates the two network families
//! and their derivatives, [`equilibrium`] finds equilibria and singular
//! parameters, [`bounds`] estimates the bound ingredients and checks the
//! validity inequality, [`graph`] specialises everything to consensus
//! bifurcations on regular graphs, and [`oracle`] checks certified balls
//! numerically by solving for the implicit map directly.

pub mod bounds;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod oracle;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use exec::Strategy;
