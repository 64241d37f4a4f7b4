//! Exact topological recursion on rational spectral curves.

pub mod algebra;
pub mod basis;
pub mod curve;
pub mod error;
pub mod free_energy;
pub mod recursion;
pub mod wkb;

pub use error::{Error, Result};
