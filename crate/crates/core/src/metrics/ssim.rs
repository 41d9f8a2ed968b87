use serde::{Deserialize, Serialize};

use super::check_same_shape;
use super::filter::{gaussian_kernel, Plane};
use crate::error::{ensure, Result};
use crate::grid::ImageGrid;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window_size: usize,
    pub window_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl SsimParams {
    /// Gaussian 11 / 1.5, k1 = 0.01, k2 = 0.03.
    pub fn with_range(data_range: f64) -> Self {
        Self {
            window_size: 11,
            window_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range,
        }
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.window_size % 2 == 1, Argument, "SSIM window size must be odd");
        ensure!(self.window_sigma > 0.0, Argument, "SSIM window sigma must be positive");
        ensure!(self.k1 > 0.0 && self.k2 > 0.0, Argument, "SSIM constants must be positive");
        ensure!(
            self.data_range.is_finite() && self.data_range > 0.0,
            Argument,
            "data range must be positive"
        );
        Ok(())
    }
}

/// Mean SSIM over every window position fully inside the image.
pub fn ssim<T: Real>(a: &ImageGrid<T>, b: &ImageGrid<T>, p: &SsimParams) -> Result<f64> {
    p.validate()?;
    check_same_shape(a, b)?;
    ensure!(
        a.width() >= p.window_size && a.height() >= p.window_size,
        Argument,
        "image {}x{} smaller than the {} px SSIM window",
        a.width(),
        a.height(),
        p.window_size
    );
    let k = gaussian_kernel(p.window_size, p.window_sigma);
    let (x, y) = (Plane::from(a), Plane::from(b));
    let mx = x.filter_valid(&k);
    let my = y.filter_valid(&k);
    let xx = x.map2(&x, |u, v| u * v).filter_valid(&k);
    let yy = y.map2(&y, |u, v| u * v).filter_valid(&k);
    let xy = x.map2(&y, |u, v| u * v).filter_valid(&k);
    let c1 = (p.k1 * p.data_range).powi(2);
    let c2 = (p.k2 * p.data_range).powi(2);
    let mut total = 0.0;
    for i in 0..mx.v.len() {
        let (ux, uy) = (mx.v[i], my.v[i]);
        let vx = xx.v[i] - ux * ux;
        let vy = yy.v[i] - uy * uy;
        let cxy = xy.v[i] - ux * uy;
        total += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2))
            / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok(total / mx.v.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn noise(seed: u64) -> ImageGrid<f64> {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ImageGrid::from_fn(32, 24, 1.0, |_, _| r.gen()).unwrap()
    }

    #[test]
    fn self_similarity_and_symmetry() {
        let (a, b) = (noise(1), noise(2));
        let p = SsimParams::with_range(1.0);
        assert!((ssim(&a, &a, &p).unwrap() - 1.0).abs() < 1e-9);
        let ab = ssim(&a, &b, &p).unwrap();
        assert!((ab - ssim(&b, &a, &p).unwrap()).abs() < 1e-12);
        assert!((-1.0..0.5).contains(&ab));
    }

    #[test]
    fn constant_images_closed_form() {
        let (c, d) = (0.3, 0.2);
        let a = ImageGrid::<f64>::from_fn(16, 16, 1.0, |_, _| c).unwrap();
        let b = ImageGrid::<f64>::from_fn(16, 16, 1.0, |_, _| c + d).unwrap();
        let p = SsimParams::with_range(1.0);
        let c1 = (0.01f64).powi(2);
        let expect = (2.0 * c * (c + d) + c1) / (c * c + (c + d) * (c + d) + c1);
        assert!((ssim(&a, &b, &p).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_or_mismatched() {
        let p = SsimParams::with_range(1.0);
        let small = ImageGrid::<f64>::zeros(10, 16, 1.0).unwrap();
        assert!(ssim(&small, &small, &p).is_err());
        assert!(ssim(&noise(1), &ImageGrid::zeros(32, 25, 1.0).unwrap(), &p).is_err());
        let mut even = p;
        even.window_size = 10;
        assert!(ssim(&noise(1), &noise(1), &even).is_err());
    }
}
