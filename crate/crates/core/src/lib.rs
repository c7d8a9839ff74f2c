//! Monte Carlo laboratory for the complement of a Brownian path.
//!
//! Estimates the expected heat content `E(s, t)` of the complement of a
//! Brownian path through Wiener-sausage sumset volumes, Newtonian capacities
//! of path ranges by walk-on-spheres, the inradius and cover time of the
//! torus cut by a path, and the smallest Dirichlet eigenvalue of the
//! Laplacian on the torus with an obstacle removed.
//!
//! Brownian motion throughout has the Laplacian (not half of it) as its
//! generator.

pub mod constants;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod harness;
pub mod potential;
pub mod sausage;
pub mod spectral;
pub mod stats;
pub mod stochastic;

pub use error::{LabError, Result};
pub use stats::MCEstimate;
pub use stochastic::{sample_path, wrap_to_torus, Path, RngStream, TorusPath};
