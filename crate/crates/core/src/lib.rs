//! Sparse recovery laboratory: basis pursuit over Gaussian and partial
//! Fourier measurements, restricted isometry constants, and the cone and
//! Gaussian-width geometry behind sample-complexity bounds.

pub mod ensembles;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod numerics;
pub mod recovery;
pub mod ric;

pub use error::{Error, Result};
