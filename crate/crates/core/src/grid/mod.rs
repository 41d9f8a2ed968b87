//! Core value types: images, sinograms, masks and acquisition geometry.

mod io;
mod png;

pub use io::{
    read_image, read_mask, read_sinogram, sha256_hex, write_image, write_mask, write_sinogram,
    RawKind, Sidecar,
};
pub use png::{export_png, Window};

use crate::error::{ensure, Result};
use crate::scalar::Real;

pub const MIN_GRID_SIDE: usize = 8;

/// 2D attenuation image, row-major, row 0 at the top.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid<T> {
    width: usize,
    height: usize,
    spacing_mm: f64,
    values: Vec<T>,
}

impl<T: Real> ImageGrid<T> {
    pub fn new(width: usize, height: usize, spacing_mm: f64, values: Vec<T>) -> Result<Self> {
        ensure!(
            width >= MIN_GRID_SIDE && height >= MIN_GRID_SIDE,
            Validation,
            "image must be at least {MIN_GRID_SIDE}x{MIN_GRID_SIDE}, got {width}x{height}"
        );
        ensure!(
            spacing_mm.is_finite() && spacing_mm > 0.0,
            Validation,
            "pixel spacing must be positive, got {spacing_mm}"
        );
        ensure!(
            values.len() == width * height,
            Validation,
            "expected {} samples, got {}",
            width * height,
            values.len()
        );
        ensure!(
            values.iter().all(|v| v.is_finite()),
            Validation,
            "image contains non-finite samples"
        );
        Ok(Self {
            width,
            height,
            spacing_mm,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize, spacing_mm: f64) -> Result<Self> {
        Self::new(width, height, spacing_mm, vec![T::zero(); width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        spacing_mm: f64,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, spacing_mm, values)
    }

    /// Same geometry, new samples. Samples must be finite.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(self.width, self.height, self.spacing_mm, values)
    }

    /// Internal constructor for results whose finiteness the caller guarantees.
    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        spacing_mm: f64,
        values: Vec<T>,
    ) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            spacing_mm,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing_mm(&self) -> f64 {
        self.spacing_mm
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.values[y * self.width..(y + 1) * self.width]
    }

    pub fn same_shape<U: Real>(&self, other: &ImageGrid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn min_max(&self) -> (T, T) {
        self.values.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), &v| (lo.min(v), hi.max(v)),
        )
    }

    /// Image diagonal in pixels.
    pub fn diagonal_px(&self) -> f64 {
        ((self.width * self.width + self.height * self.height) as f64).sqrt()
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn cast<U: Real>(&self) -> ImageGrid<U> {
        ImageGrid {
            width: self.width,
            height: self.height,
            spacing_mm: self.spacing_mm,
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// Projection data, angle-major: view `i` occupies `values[i*n_detectors..]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram<T> {
    n_detectors: usize,
    angles_rad: Vec<f64>,
    detector_spacing_mm: f64,
    values: Vec<T>,
}

impl<T: Real> Sinogram<T> {
    pub fn new(
        n_detectors: usize,
        angles_rad: Vec<f64>,
        detector_spacing_mm: f64,
        values: Vec<T>,
    ) -> Result<Self> {
        ensure!(n_detectors >= 1, Validation, "sinogram needs detectors");
        ensure!(!angles_rad.is_empty(), Validation, "sinogram needs views");
        ensure!(
            angles_rad.iter().all(|a| a.is_finite()),
            Validation,
            "angles must be finite"
        );
        ensure!(
            angles_rad.windows(2).all(|w| w[0] < w[1]),
            Validation,
            "angles must be strictly increasing"
        );
        let (first, last) = (angles_rad[0], angles_rad[angles_rad.len() - 1]);
        ensure!(
            first >= 0.0 && last <= std::f64::consts::PI,
            Validation,
            "angles must lie in [0, pi], got [{first}, {last}]"
        );
        ensure!(
            detector_spacing_mm.is_finite() && detector_spacing_mm > 0.0,
            Validation,
            "detector spacing must be positive"
        );
        ensure!(
            values.len() == angles_rad.len() * n_detectors,
            Validation,
            "expected {} samples, got {}",
            angles_rad.len() * n_detectors,
            values.len()
        );
        ensure!(
            values.iter().all(|v| v.is_finite()),
            Validation,
            "sinogram contains non-finite samples"
        );
        Ok(Self {
            n_detectors,
            angles_rad,
            detector_spacing_mm,
            values,
        })
    }

    pub fn zeros(geom: &ProjectionGeometry) -> Self {
        Self {
            n_detectors: geom.n_detectors,
            angles_rad: geom.angles(),
            detector_spacing_mm: geom.detector_spacing_mm,
            values: vec![T::zero(); geom.n_angles * geom.n_detectors],
        }
    }

    pub(crate) fn from_parts_unchecked(
        n_detectors: usize,
        angles_rad: Vec<f64>,
        detector_spacing_mm: f64,
        values: Vec<T>,
    ) -> Self {
        debug_assert_eq!(values.len(), angles_rad.len() * n_detectors);
        Self {
            n_detectors,
            angles_rad,
            detector_spacing_mm,
            values,
        }
    }

    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(
            self.n_detectors,
            self.angles_rad.clone(),
            self.detector_spacing_mm,
            values,
        )
    }

    pub fn n_detectors(&self) -> usize {
        self.n_detectors
    }

    pub fn n_views(&self) -> usize {
        self.angles_rad.len()
    }

    pub fn angles_rad(&self) -> &[f64] {
        &self.angles_rad
    }

    pub fn detector_spacing_mm(&self) -> f64 {
        self.detector_spacing_mm
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn view(&self, i: usize) -> &[T] {
        &self.values[i * self.n_detectors..(i + 1) * self.n_detectors]
    }

    /// True when angles, detector count and pitch agree with `geom`.
    pub fn matches(&self, geom: &ProjectionGeometry) -> bool {
        self.n_detectors == geom.n_detectors
            && self.detector_spacing_mm == geom.detector_spacing_mm
            && self.angles_rad == geom.angles()
    }
}

/// Parallel-beam acquisition layout.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProjectionGeometry {
    pub n_angles: usize,
    pub angle_start_rad: f64,
    pub angle_end_rad: f64,
    pub n_detectors: usize,
    pub detector_spacing_mm: f64,
    pub include_pi_endpoint: bool,
}

impl ProjectionGeometry {
    /// `n_angles` views over `[0, pi]` with both endpoints present.
    pub fn half_turn(n_angles: usize, n_detectors: usize, detector_spacing_mm: f64) -> Result<Self> {
        let g = Self {
            n_angles,
            angle_start_rad: 0.0,
            angle_end_rad: std::f64::consts::PI,
            n_detectors,
            detector_spacing_mm,
            include_pi_endpoint: true,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_angles >= 2, Geometry, "need at least 2 views");
        ensure!(self.n_detectors >= 1, Geometry, "need at least 1 detector");
        ensure!(
            self.detector_spacing_mm.is_finite() && self.detector_spacing_mm > 0.0,
            Geometry,
            "detector spacing must be positive"
        );
        ensure!(
            self.angle_start_rad >= 0.0
                && self.angle_end_rad <= std::f64::consts::PI
                && self.angle_start_rad < self.angle_end_rad,
            Geometry,
            "angular range must satisfy 0 <= start < end <= pi"
        );
        if self.include_pi_endpoint {
            ensure!(
                ((self.angle_end_rad - self.angle_start_rad) - std::f64::consts::PI).abs() < 1e-12,
                Geometry,
                "pi-endpoint geometry must span exactly pi"
            );
        }
        Ok(())
    }

    /// View angles. Inclusive of `angle_end_rad` when `include_pi_endpoint`.
    pub fn angles(&self) -> Vec<f64> {
        let span = self.angle_end_rad - self.angle_start_rad;
        let denom = if self.include_pi_endpoint {
            (self.n_angles - 1) as f64
        } else {
            self.n_angles as f64
        };
        (0..self.n_angles)
            .map(|i| {
                if self.include_pi_endpoint && i == self.n_angles - 1 {
                    self.angle_end_rad
                } else {
                    self.angle_start_rad + span * i as f64 / denom
                }
            })
            .collect()
    }

    /// Offset of detector bin `k` from the rotation axis, in mm.
    #[inline]
    pub fn detector_offset_mm(&self, k: usize) -> f64 {
        (k as f64 - (self.n_detectors as f64 - 1.0) / 2.0) * self.detector_spacing_mm
    }

    pub fn detector_extent_mm(&self) -> f64 {
        self.n_detectors as f64 * self.detector_spacing_mm
    }

    /// Rebuild the geometry that produced `sino`, assuming uniform sampling over its angle list.
    pub fn from_sinogram<T: Real>(sino: &Sinogram<T>) -> Result<Self> {
        let angles = sino.angles_rad();
        ensure!(angles.len() >= 2, Geometry, "need at least 2 views");
        let start = angles[0];
        let end = angles[angles.len() - 1];
        let pi_span = ((end - start) - std::f64::consts::PI).abs() < 1e-12;
        let g = if pi_span {
            Self {
                n_angles: angles.len(),
                angle_start_rad: start,
                angle_end_rad: end,
                n_detectors: sino.n_detectors(),
                detector_spacing_mm: sino.detector_spacing_mm(),
                include_pi_endpoint: true,
            }
        } else {
            let step = (end - start) / (angles.len() - 1) as f64;
            Self {
                n_angles: angles.len(),
                angle_start_rad: start,
                angle_end_rad: start + step * angles.len() as f64,
                n_detectors: sino.n_detectors(),
                detector_spacing_mm: sino.detector_spacing_mm(),
                include_pi_endpoint: false,
            }
        };
        g.validate()?;
        ensure!(
            g.angles() == angles,
            Geometry,
            "sinogram angles are not uniformly sampled"
        );
        Ok(g)
    }
}

/// Boolean annotation over an image grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    spacing_mm: f64,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, spacing_mm: f64, values: Vec<bool>) -> Result<Self> {
        ensure!(
            values.len() == width * height,
            Validation,
            "mask expects {} samples, got {}",
            width * height,
            values.len()
        );
        ensure!(
            spacing_mm.is_finite() && spacing_mm > 0.0,
            Validation,
            "mask spacing must be positive"
        );
        Ok(Self {
            width,
            height,
            spacing_mm,
            values,
        })
    }

    pub fn empty(width: usize, height: usize, spacing_mm: f64) -> Self {
        Self {
            width,
            height,
            spacing_mm,
            values: vec![false; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        spacing_mm: f64,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            spacing_mm,
            values,
        }
    }

    pub fn like<T: Real>(img: &ImageGrid<T>, f: impl FnMut(usize, usize) -> bool) -> Self {
        Self::from_fn(img.width(), img.height(), img.spacing_mm(), f)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing_mm(&self) -> f64 {
        self.spacing_mm
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.values[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.values.iter().any(|&v| v)
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn matches_image<T: Real>(&self, img: &ImageGrid<T>) -> bool {
        self.width == img.width() && self.height == img.height()
    }

    pub fn and(&self, other: &BinaryMask) -> BinaryMask {
        self.zip(other, |a, b| a && b)
    }

    pub fn and_not(&self, other: &BinaryMask) -> BinaryMask {
        self.zip(other, |a, b| a && !b)
    }

    fn zip(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> BinaryMask {
        assert!(self.same_shape(other), "mask shapes differ");
        BinaryMask {
            width: self.width,
            height: self.height,
            spacing_mm: self.spacing_mm,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}
