use serde::{Deserialize, Serialize};

use super::ReconDims;
use crate::error::{ensure, Error, Result};
use crate::grid::{BinaryMask, ImageGrid, ProjectionGeometry, Sinogram};
use crate::projector::{backproject, backproject_rows, radon_forward};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SirtInit {
    #[default]
    Zeros,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirtConfig {
    pub n_iterations: usize,
    #[serde(default = "one")]
    pub relaxation: f64,
    #[serde(default = "yes")]
    pub nonneg: bool,
    #[serde(default)]
    pub init: SirtInit,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

impl SirtConfig {
    pub fn with_iterations(n_iterations: usize) -> Self {
        Self {
            n_iterations,
            relaxation: 1.0,
            nonneg: true,
            init: SirtInit::Zeros,
        }
    }

    /// Deliberately under-converged: leaves residual blur.
    pub fn reduced() -> Self {
        Self::with_iterations(50)
    }

    pub fn converged() -> Self {
        Self::with_iterations(400)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_iterations >= 1, Argument, "SIRT needs at least one iteration");
        ensure!(
            self.relaxation > 0.0 && self.relaxation <= 2.0,
            Argument,
            "relaxation {} outside (0, 2]",
            self.relaxation
        );
        Ok(())
    }
}

/// Pixels whose centres lie inside the inscribed circle of the grid.
pub fn reconstruction_support(width: usize, height: usize, spacing_mm: f64) -> BinaryMask {
    let cw = (width as f64 - 1.0) / 2.0;
    let ch = (height as f64 - 1.0) / 2.0;
    let r = width.min(height) as f64 / 2.0;
    BinaryMask::from_fn(width, height, spacing_mm, |x, y| {
        let (dx, dy) = (x as f64 - cw, y as f64 - ch);
        dx * dx + dy * dy <= r * r
    })
}

/// SIRT with precomputed normalisations for one geometry and output grid:
/// `f += relaxation * C . R^T (W . (s - R f))`, `W` the reciprocal ray sums
/// and `C` the reciprocal pixel sums (zero where a sum vanishes). Pixels
/// outside the inscribed circle stay at zero.
pub struct Sirt<T> {
    geom: ProjectionGeometry,
    dims: ReconDims,
    support: BinaryMask,
    support_columns: Vec<std::ops::Range<usize>>,
    ray_weights: Vec<T>,
    pixel_weights: Vec<T>,
}

impl<T: Real> Sirt<T> {
    pub fn new(geom: &ProjectionGeometry, dims: ReconDims) -> Result<Self> {
        let support = reconstruction_support(dims.width, dims.height, dims.spacing_mm);
        let indicator = ImageGrid::<T>::new(
            dims.width,
            dims.height,
            dims.spacing_mm,
            support
                .values()
                .iter()
                .map(|&b| if b { T::one() } else { T::zero() })
                .collect(),
        )
        .map_err(|e| Error::Argument(format!("output grid: {e}")))?;
        let row_sums = radon_forward(&indicator, geom)?;
        let ones = Sinogram::zeros(geom).with_values(vec![T::one(); row_sums.values().len()])?;
        let col_sums = backproject(&ones, geom, dims.width, dims.height, dims.spacing_mm)?;
        let recip = |v: T| if v > T::zero() { T::one() / v } else { T::zero() };
        let ray_weights = row_sums.values().iter().map(|&v| recip(v)).collect();
        let pixel_weights = col_sums
            .values()
            .iter()
            .zip(support.values())
            .map(|(&v, &inside)| if inside { recip(v) } else { T::zero() })
            .collect();
        let support_columns = (0..dims.height)
            .map(|y| {
                let inside: Vec<usize> = (0..dims.width).filter(|&x| support.get(x, y)).collect();
                match (inside.first(), inside.last()) {
                    (Some(&a), Some(&b)) => a..b + 1,
                    _ => 0..0,
                }
            })
            .collect();
        Ok(Self {
            geom: geom.clone(),
            dims,
            support,
            support_columns,
            ray_weights,
            pixel_weights,
        })
    }

    pub fn support(&self) -> &BinaryMask {
        &self.support
    }

    /// One update in place; `iteration` is only used to label failures.
    pub fn step(&self, f: &mut Vec<T>, sino: &Sinogram<T>, cfg: &SirtConfig, iteration: usize) -> Result<()> {
        let d = self.dims;
        let current = ImageGrid::from_parts_unchecked(d.width, d.height, d.spacing_mm, std::mem::take(f));
        let proj = radon_forward(&current, &self.geom)?;
        *f = current.into_values();
        let residual: Vec<T> = sino
            .values()
            .iter()
            .zip(proj.values())
            .zip(&self.ray_weights)
            .map(|((&s, &p), &w)| (s - p) * w)
            .collect();
        let residual = Sinogram::from_parts_unchecked(
            self.geom.n_detectors,
            sino.angles_rad().to_vec(),
            self.geom.detector_spacing_mm,
            residual,
        );
        let update = backproject_rows(
            &residual,
            &self.geom,
            d.width,
            d.height,
            d.spacing_mm,
            Some(&self.support_columns),
        )?;
        let lambda = T::of(cfg.relaxation);
        for ((v, &u), &c) in f.iter_mut().zip(update.values()).zip(&self.pixel_weights) {
            *v += lambda * c * u;
            if cfg.nonneg && *v < T::zero() {
                *v = T::zero();
            }
            if !v.is_finite() {
                return Err(Error::Numerical { iteration });
            }
        }
        Ok(())
    }

    pub fn run(&self, sino: &Sinogram<T>, cfg: &SirtConfig) -> Result<ImageGrid<T>> {
        let d = self.dims;
        let f = match cfg.init {
            SirtInit::Zeros => vec![T::zero(); d.width * d.height],
        };
        self.iterate(f, 0, sino, cfg)
    }

    /// Continue from the output of an earlier run of `done` iterations with
    /// the same sinogram and settings, up to `cfg.n_iterations`.
    pub fn resume(&self, start: &ImageGrid<T>, done: usize, sino: &Sinogram<T>, cfg: &SirtConfig) -> Result<ImageGrid<T>> {
        ensure!(
            start.width() == self.dims.width && start.height() == self.dims.height,
            Argument,
            "starting image does not match the reconstruction grid"
        );
        self.iterate(start.values().to_vec(), done, sino, cfg)
    }

    fn iterate(&self, mut f: Vec<T>, from: usize, sino: &Sinogram<T>, cfg: &SirtConfig) -> Result<ImageGrid<T>> {
        cfg.validate()?;
        ensure!(
            sino.matches(&self.geom),
            Argument,
            "sinogram does not match the reconstruction geometry"
        );
        for it in from..cfg.n_iterations {
            self.step(&mut f, sino, cfg, it)?;
        }
        let d = self.dims;
        Ok(ImageGrid::from_parts_unchecked(d.width, d.height, d.spacing_mm, f))
    }
}

pub fn sirt_reconstruct<T: Real>(
    sino: &Sinogram<T>,
    geom: &ProjectionGeometry,
    dims: ReconDims,
    cfg: &SirtConfig,
) -> Result<ImageGrid<T>> {
    cfg.validate()?;
    ensure!(
        sino.matches(geom),
        Argument,
        "sinogram does not match the reconstruction geometry"
    );
    Sirt::new(geom, dims)?.run(sino, cfg)
}
