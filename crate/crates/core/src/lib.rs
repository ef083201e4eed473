//! Prescribed curvature measures for star-shaped hypersurfaces in hyperbolic
//! space: symmetric-function calculus, sphere discretisation, radial-graph
//! geometry, a Newton continuation solver, a priori validators and the
//! Steiner-type volume decomposition.

pub mod banded;
pub mod cli;
pub mod error;
pub mod estimates;
pub mod hypersurface;
pub mod properties;
pub mod quadrature;
pub mod solver;
pub mod sphere_grid;
pub mod steiner;
pub mod symfun;

pub use error::{Error, Result};
