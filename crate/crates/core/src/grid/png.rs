use std::path::Path;

use image::{ImageBuffer, Luma};

use super::ImageGrid;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Display window mapped affinely onto `[0, 65535]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub min: f64,
    pub max: f64,
}

impl Window {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::Argument(format!(
                "window requires finite min < max, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    /// Clamp and scale; ties round to even.
    pub fn map(&self, v: f64) -> u16 {
        let t = ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0);
        (t * 65535.0).round_ties_even() as u16
    }
}

/// 16-bit grayscale PNG of `img` under `window`.
pub fn export_png<T: Real>(img: &ImageGrid<T>, path: impl AsRef<Path>, window: Window) -> Result<()> {
    Window::new(window.min, window.max)?;
    let path = path.as_ref();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(img.width() as u32, img.height() as u32, |x, y| {
            Luma([window.map(img.get(x as usize, y as usize).as_f64())])
        });
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::io(path, std::io::Error::other(other.to_string())),
        })
}
