use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::ReconDims;
use crate::error::{ensure, Error, Result};
use crate::grid::{ImageGrid, ProjectionGeometry, Sinogram};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampFilter {
    Ramlak,
    Hann,
}

impl std::str::FromStr for RampFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramlak" => Ok(Self::Ramlak),
            "hann" => Ok(Self::Hann),
            other => Err(Error::Argument(format!("unknown filter {other:?}"))),
        }
    }
}

/// Frequency response of the band-limited ramp, built from its sampled
/// spatial kernel (`1/(4d^2)` at 0, `-1/(n pi d)^2` at odd `n`) and scaled
/// by `d` so the discrete convolution approximates the integral.
fn filter_response(len: usize, d: f64, filter: RampFilter) -> Vec<f64> {
    let mut kernel = vec![Complex::new(0.0, 0.0); len];
    kernel[0].re = 1.0 / (4.0 * d * d);
    for n in (1..len / 2).step_by(2) {
        let v = -1.0 / ((n as f64 * std::f64::consts::PI * d).powi(2));
        kernel[n].re = v;
        kernel[len - n].re = v;
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut kernel);
    (0..len)
        .map(|m| {
            let ramp = kernel[m].re * d;
            match filter {
                RampFilter::Ramlak => ramp,
                RampFilter::Hann => {
                    let f = m.min(len - m) as f64 / (len as f64 / 2.0);
                    ramp * 0.5 * (1.0 + (std::f64::consts::PI * f).cos())
                }
            }
        })
        .collect()
}

/// Ramp-filter each view, then linearly interpolating backprojection scaled by `pi / n_views`.
pub fn fbp_reconstruct<T: Real>(
    sino: &Sinogram<T>,
    geom: &ProjectionGeometry,
    dims: ReconDims,
    filter: RampFilter,
) -> Result<ImageGrid<T>> {
    ensure!(
        sino.matches(geom),
        Argument,
        "sinogram does not match the reconstruction geometry"
    );
    ensure!(
        dims.width >= crate::grid::MIN_GRID_SIDE && dims.height >= crate::grid::MIN_GRID_SIDE,
        Argument,
        "output grid too small"
    );
    let nd = geom.n_detectors;
    let d = geom.detector_spacing_mm;
    let len = (2 * nd).next_power_of_two();
    let response = filter_response(len, d, filter);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let mut filtered = vec![0.0f64; sino.n_views() * nd];
    for (v, out) in filtered.chunks_mut(nd).enumerate() {
        let mut buf: Vec<Complex<f64>> = sino
            .view(v)
            .iter()
            .map(|x| Complex::new(x.as_f64(), 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(len)
            .collect();
        fwd.process(&mut buf);
        for (b, h) in buf.iter_mut().zip(&response) {
            *b *= *h;
        }
        inv.process(&mut buf);
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b.re / len as f64;
        }
    }

    let trig: Vec<(f64, f64)> = geom.angles().iter().map(|a| a.sin_cos()).collect();
    let scale = std::f64::consts::PI / sino.n_views() as f64;
    let cw = (dims.width as f64 - 1.0) / 2.0;
    let ch = (dims.height as f64 - 1.0) / 2.0;
    let origin = (nd as f64 - 1.0) / 2.0;
    let mut values = vec![T::zero(); dims.width * dims.height];
    values.par_chunks_mut(dims.width).enumerate().for_each(|(j, row)| {
        let y = (ch - j as f64) * dims.spacing_mm;
        for (i, px) in row.iter_mut().enumerate() {
            let x = (i as f64 - cw) * dims.spacing_mm;
            let mut acc = 0.0;
            for (v, &(s, c)) in trig.iter().enumerate() {
                let u = (x * c + y * s) / d + origin;
                let k = u.floor();
                let t = u - k;
                let k = k as isize;
                let q = &filtered[v * nd..(v + 1) * nd];
                let at = |k: isize| if k >= 0 && (k as usize) < nd { q[k as usize] } else { 0.0 };
                acc += (1.0 - t) * at(k) + t * at(k + 1);
            }
            *px = T::of(acc * scale);
        }
    });
    Ok(ImageGrid::from_parts_unchecked(dims.width, dims.height, dims.spacing_mm, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::sobel_edges;
    use crate::phantom::{make_phantom, PhantomSpec};
    use crate::projector::{add_noise, default_geometry, radon_forward, NoiseSpec};

    #[test]
    fn zero_sinogram_gives_zero_image() {
        let g = ProjectionGeometry::half_turn(30, 46, 1.0).unwrap();
        let s = Sinogram::<f64>::zeros(&g);
        let out = fbp_reconstruct(&s, &g, ReconDims::square(32, 1.0), RampFilter::Ramlak).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disk_interior_level() {
        let spec = PhantomSpec::disk(128, 0.4, 1.0);
        let img: ImageGrid<f64> = make_phantom(&spec).unwrap();
        let g = default_geometry(&img, Some(180));
        let s = radon_forward(&img, &g).unwrap();
        let rec = fbp_reconstruct(&s, &g, ReconDims::of(&img), RampFilter::Ramlak).unwrap();
        let (mut sum, mut n) = (0.0, 0);
        for y in 0..128 {
            for x in 0..128 {
                let r = ((x as f64 - 63.5).powi(2) + (y as f64 - 63.5).powi(2)).sqrt();
                if r < 20.0 {
                    sum += rec.get(x, y);
                    n += 1;
                }
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.05, "interior mean {mean}");
    }

    #[test]
    fn hann_is_smoother_than_ramlak() {
        let img: ImageGrid<f64> = make_phantom(&PhantomSpec::disk(64, 0.5, 1.0)).unwrap();
        let g = default_geometry(&img, Some(90));
        let s = add_noise(&radon_forward(&img, &g).unwrap(), &NoiseSpec { sigma: 0.5, seed: 3 }).unwrap();
        let dims = ReconDims::of(&img);
        let energy = |f| -> f64 {
            sobel_edges(&fbp_reconstruct(&s, &g, dims, f).unwrap()).unwrap().sum()
        };
        assert!(energy(RampFilter::Hann) < energy(RampFilter::Ramlak));
    }

    #[test]
    fn mismatched_sinogram_rejected() {
        let g = ProjectionGeometry::half_turn(30, 46, 1.0).unwrap();
        let s = Sinogram::<f64>::zeros(&g);
        let mut other = g.clone();
        other.n_detectors = 50;
        assert!(fbp_reconstruct(&s, &other, ReconDims::square(32, 1.0), RampFilter::Hann).is_err());
    }
}
