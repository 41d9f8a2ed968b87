//! Image reconstruction from parallel-beam sinograms.

mod fbp;
mod sirt;

pub use fbp::{fbp_reconstruct, RampFilter};
pub use sirt::{reconstruction_support, sirt_reconstruct, Sirt, SirtConfig, SirtInit};

use serde::{Deserialize, Serialize};

/// Output grid of a reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconDims {
    pub width: usize,
    pub height: usize,
    pub spacing_mm: f64,
}

impl ReconDims {
    pub fn square(size: usize, spacing_mm: f64) -> Self {
        Self {
            width: size,
            height: size,
            spacing_mm,
        }
    }

    pub fn of<T: crate::scalar::Real>(img: &crate::grid::ImageGrid<T>) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            spacing_mm: img.spacing_mm(),
        }
    }
}
