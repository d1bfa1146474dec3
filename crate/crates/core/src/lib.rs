//! Walking-droplet dynamics in an elliptical corral.
//!
//! The corral supports two Dirichlet eigenmodes of the Helmholtz equation,
//! built from angular and radial Mathieu functions. A stochastic discrete
//! map propels the droplet perpendicular to the gradient of a randomly
//! weighted superposition of those modes, and the long-time statistics of
//! the resulting trajectories are binned into heatmaps.
//!
//! Module map:
//! - [`geometry`]: ellipse constants, coordinate transforms, sampling
//! - [`specfun`]: Bessel functions, angular and radial Mathieu functions
//! - [`modes`]: eigenmode roots, evaluation, gradients, grid caches
//! - [`dynamics`]: the iterated map and run management
//! - [`stats`]: histograms, averaged wavefields, correlations
//! - [`export`]: CSV / PGM writers and readers
//! - [`cli`]: configuration and command workflows

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod geometry;
pub mod modes;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{EllipseGeometry, Point};
pub use specfun::{AngularSolution, ModeSpec, Parity};
