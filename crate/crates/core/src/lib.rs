//! Ritus eigenfunctions and the exact Foldy-Wouthuysen transformation for
//! planar Dirac fermions in static magnetic fields `A = (0, 0, W(x))`.

pub mod banded;
pub mod clifford;
pub mod dirac;
pub mod error;
pub mod field;
pub mod fw;
pub mod propagator;
pub mod ritus;
pub mod spectral;
pub mod stencil;

pub use error::{Error, Result};
