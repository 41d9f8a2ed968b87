//! Synthetic motion-corrupted micro-CT slices.
//!
//! Phantoms are projected with a parallel-beam Joseph projector, a block of
//! views is replaced by projections of a rotated pose, and the result is
//! reconstructed with SIRT or FBP. Image metrics and bone morphometry score
//! the outcome; [`pipeline`] ties it together into reproducible datasets.
//!
//! The numeric core is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the common choices.

pub mod error;
pub mod grid;
pub mod metrics;
pub mod morpho;
pub mod motion;
pub mod phantom;
pub mod pipeline;
pub mod projector;
pub mod recon;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use grid::{BinaryMask, ProjectionGeometry};
pub use scalar::Real;

pub type Image = grid::ImageGrid<f64>;
pub type Image32 = grid::ImageGrid<f32>;
pub type Sino = grid::Sinogram<f64>;
pub type Sino32 = grid::Sinogram<f32>;
