use serde::{Deserialize, Serialize};

use super::check_same_shape;
use super::filter::{gaussian_kernel, Plane};
use crate::error::{ensure, Result};
use crate::grid::ImageGrid;
use crate::scalar::Real;

/// Range on which the visual-noise variance is defined (8-bit samples).
const NOMINAL_RANGE: f64 = 255.0;
const EPS: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VifParams {
    pub n_scales: usize,
    /// Visual noise variance for an 8-bit range; rescaled by `(data_range / 255)^2`.
    pub noise_variance: f64,
    pub data_range: f64,
}

impl VifParams {
    pub fn with_range(data_range: f64) -> Self {
        Self {
            n_scales: 4,
            noise_variance: 2.0,
            data_range,
        }
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.n_scales >= 1, Argument, "VIF needs at least one scale");
        ensure!(self.noise_variance > 0.0, Argument, "VIF noise variance must be positive");
        ensure!(
            self.data_range.is_finite() && self.data_range > 0.0,
            Argument,
            "data range must be positive"
        );
        Ok(())
    }
}

/// Pixel-domain multi-scale VIF. Scale `s` (1-based) uses a Gaussian of
/// length `2^(n-s+1) + 1` and sigma `length / 5`; scales after the first
/// are smoothed then decimated by 2 before local statistics are taken.
pub fn vif<T: Real>(reference: &ImageGrid<T>, test: &ImageGrid<T>, p: &VifParams) -> Result<f64> {
    p.validate()?;
    check_same_shape(reference, test)?;
    let unit = (p.data_range / NOMINAL_RANGE).powi(2);
    let sigma_n = p.noise_variance * unit;
    let eps = EPS * unit;

    let mut r = Plane::from(reference);
    let mut d = Plane::from(test);
    let (mut num, mut den) = (0.0, 0.0);
    for scale in 1..=p.n_scales {
        let n = (1usize << (p.n_scales - scale + 1)) + 1;
        let k = gaussian_kernel(n, n as f64 / 5.0);
        if scale > 1 {
            ensure!(
                r.w >= n && r.h >= n,
                Argument,
                "image too small for {} VIF scales",
                p.n_scales
            );
            r = r.filter_valid(&k).decimate();
            d = d.filter_valid(&k).decimate();
        }
        ensure!(
            r.w >= n && r.h >= n,
            Argument,
            "image too small for {} VIF scales",
            p.n_scales
        );
        let mu1 = r.filter_valid(&k);
        let mu2 = d.filter_valid(&k);
        let rr = r.map2(&r, |a, b| a * b).filter_valid(&k);
        let dd = d.map2(&d, |a, b| a * b).filter_valid(&k);
        let rd = r.map2(&d, |a, b| a * b).filter_valid(&k);
        for i in 0..mu1.v.len() {
            let (m1, m2) = (mu1.v[i], mu2.v[i]);
            let mut s1 = (rr.v[i] - m1 * m1).max(0.0);
            let s2 = (dd.v[i] - m2 * m2).max(0.0);
            let s12 = rd.v[i] - m1 * m2;

            let mut g = s12 / (s1 + eps);
            let mut sv = s2 - g * s12;
            if s1 < eps {
                g = 0.0;
                sv = s2;
                s1 = 0.0;
            }
            if s2 < eps {
                g = 0.0;
                sv = 0.0;
            }
            if g < 0.0 {
                sv = s2;
                g = 0.0;
            }
            sv = sv.max(eps);
            num += (1.0 + g * g * s1 / (sv + sigma_n)).log10();
            den += (1.0 + s1 / sigma_n).log10();
        }
    }
    Ok(if den > 0.0 { num / den } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{make_phantom, PhantomSpec};
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn phantom() -> ImageGrid<f64> {
        make_phantom(&PhantomSpec::distal(64, 5)).unwrap()
    }

    fn noisy(img: &ImageGrid<f64>, sigma: f64, seed: u64) -> ImageGrid<f64> {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, sigma).unwrap();
        img.with_values(img.values().iter().map(|v| v + n.sample(&mut r)).collect())
            .unwrap()
    }

    #[test]
    fn identity_is_one() {
        let a = phantom();
        let v = vif(&a, &a, &VifParams::with_range(1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn noise_reduces_vif() {
        let a = phantom();
        let p = VifParams::with_range(1.0);
        assert!(vif(&a, &noisy(&a, 0.1, 1), &p).unwrap() < 1.0);
    }

    #[test]
    fn monotone_in_noise_level() {
        let a = phantom();
        let p = VifParams::with_range(1.0);
        let mean = |sigma: f64| -> f64 {
            (0..10).map(|s| vif(&a, &noisy(&a, sigma, s), &p).unwrap()).sum::<f64>() / 10.0
        };
        let (lo, mid, hi) = (mean(0.02), mean(0.08), mean(0.2));
        assert!(lo >= mid && mid >= hi, "{lo} {mid} {hi}");
    }

    #[test]
    fn too_small_rejected() {
        let a = ImageGrid::<f64>::zeros(16, 16, 1.0).unwrap();
        assert!(vif(&a, &a, &VifParams::with_range(1.0)).is_err());
        let one = VifParams {
            n_scales: 1,
            noise_variance: 2.0,
            data_range: 1.0,
        };
        assert!(vif(&a, &a, &one).is_ok());
    }
}
