//! Numerical laboratory for self-shrinkers of mean curvature flow.

pub mod covariant;
pub mod curves;
pub mod discrete;
pub mod error;
pub mod functionals;
pub mod identities;
pub mod linalg;

pub use error::{Error, Result};
pub mod immersion;
pub mod mesh;
pub mod optimize;
pub mod quadrature;
pub mod spectra;
pub mod stability;
