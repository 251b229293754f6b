//! Homogenized in-plane elastic properties of planar actuator lattices.

pub mod cli;
pub mod error;
pub mod fem;
pub mod homogenize;
pub mod meshbuild;
pub mod studies;
pub mod tiling;

pub use error::{Error, Result};
