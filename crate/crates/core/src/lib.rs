//! Optimal transport between shapes and its incompressible approximation by
//! Euler sprays.
//!
//! Shapes are raster densities with values in `[0, 1]`. The crate computes
//! optimal transport between sampled shapes, estimates the Brenier map, builds
//! ellipsoidal Euler droplets and superposes them into Euler sprays, and
//! audits the resulting flows: actions, nesting, injectivity, weak residuals
//! and convergence toward the displacement interpolant.

pub mod droplet;
pub mod error;
pub mod geometry;
pub mod interpolation;
pub mod io;
pub mod render;
pub mod spray;
pub mod stats;
pub mod tlp;
pub mod transport;
pub mod weak;

pub use error::{Error, Result};
