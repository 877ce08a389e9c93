//! Relative entropy, renormalized area, minimal surfaces of revolution and
//! mean curvature flow for hypersurfaces of the hyperbolic half-space.

pub mod error;
pub mod expansion;
pub mod flow;
pub mod geodesics;
pub mod halfspace;
pub mod minimal;
pub mod quadrature;
pub mod runner;
pub mod weights;

pub use error::{Error, Result};
