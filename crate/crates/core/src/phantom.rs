//! Seeded bone-like test objects with known ground truth.
//!
//! `distal` and `diaphyseal` are a cortical annulus around a marrow cavity
//! filled with a random trabecular lattice. The lattice is uniform white
//! noise (one ChaCha8 draw per pixel, row-major, see [`crate::rng`]) passed
//! through a separable box blur of radius 2 with clamped edges; the
//! `round(fill * n)` marrow pixels with the largest blurred values (ties by
//! lower index) become solid. Annulus and disk edges carry 4x4 supersampled
//! coverage.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::grid::{BinaryMask, ImageGrid};
use crate::rng;
use crate::scalar::Real;

pub const DEFAULT_SPACING_MM: f64 = 0.0607;
const SUPERSAMPLE: usize = 4;
const LATTICE_BLUR_RADIUS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhantomKind {
    Distal,
    Diaphyseal,
    Disk,
    Plates,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distal" => Ok(Self::Distal),
            "diaphyseal" => Ok(Self::Diaphyseal),
            "disk" => Ok(Self::Disk),
            "plates" => Ok(Self::Plates),
            other => Err(Error::Argument(format!("unknown phantom kind {other:?}"))),
        }
    }
}

/// Phantom recipe. For `disk`, the radius is `cortical_outer_frac` of the
/// half-width and the value is `attenuation_cortical`. For `plates`, solid
/// columns of width `plate_period_px / 2` repeat every `plate_period_px`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub size_px: usize,
    #[serde(default = "default_spacing")]
    pub spacing_mm: f64,
    #[serde(default)]
    pub seed: u64,
    pub cortical_outer_frac: f64,
    pub cortical_inner_frac: f64,
    pub trabecular_fill_frac: f64,
    pub attenuation_cortical: f64,
    pub attenuation_trabecular: f64,
    #[serde(default)]
    pub attenuation_background: f64,
    #[serde(default = "default_period")]
    pub plate_period_px: usize,
}

fn default_spacing() -> f64 {
    DEFAULT_SPACING_MM
}

fn default_period() -> usize {
    10
}

impl PhantomSpec {
    /// Thin cortex, dense lattice.
    pub fn distal(size_px: usize, seed: u64) -> Self {
        Self {
            kind: PhantomKind::Distal,
            size_px,
            spacing_mm: DEFAULT_SPACING_MM,
            seed,
            cortical_outer_frac: 0.85,
            cortical_inner_frac: 0.75,
            trabecular_fill_frac: 0.35,
            attenuation_cortical: 1.0,
            attenuation_trabecular: 0.7,
            attenuation_background: 0.0,
            plate_period_px: default_period(),
        }
    }

    /// Thick cortex, sparse lattice.
    pub fn diaphyseal(size_px: usize, seed: u64) -> Self {
        Self {
            kind: PhantomKind::Diaphyseal,
            cortical_outer_frac: 0.85,
            cortical_inner_frac: 0.5,
            trabecular_fill_frac: 0.1,
            ..Self::distal(size_px, seed)
        }
    }

    pub fn disk(size_px: usize, radius_frac: f64, value: f64) -> Self {
        Self {
            kind: PhantomKind::Disk,
            cortical_outer_frac: radius_frac,
            cortical_inner_frac: radius_frac / 2.0,
            trabecular_fill_frac: 0.0,
            attenuation_cortical: value,
            ..Self::distal(size_px, 0)
        }
    }

    pub fn plates(size_px: usize, period_px: usize) -> Self {
        Self {
            kind: PhantomKind::Plates,
            plate_period_px: period_px,
            ..Self::distal(size_px, 0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.size_px >= crate::grid::MIN_GRID_SIDE,
            Argument,
            "phantom size must be at least {}",
            crate::grid::MIN_GRID_SIDE
        );
        ensure!(
            self.spacing_mm.is_finite() && self.spacing_mm > 0.0,
            Argument,
            "spacing must be positive"
        );
        ensure!(
            0.0 < self.cortical_inner_frac
                && self.cortical_inner_frac < self.cortical_outer_frac
                && self.cortical_outer_frac <= 0.95,
            Argument,
            "need 0 < inner ({}) < outer ({}) <= 0.95",
            self.cortical_inner_frac,
            self.cortical_outer_frac
        );
        ensure!(
            (0.0..=1.0).contains(&self.trabecular_fill_frac),
            Argument,
            "trabecular fill must lie in [0, 1]"
        );
        let att = [
            self.attenuation_cortical,
            self.attenuation_trabecular,
            self.attenuation_background,
        ];
        ensure!(
            att.iter().all(|a| a.is_finite() && *a >= 0.0),
            Argument,
            "attenuations must be finite and nonnegative"
        );
        if self.kind == PhantomKind::Plates {
            ensure!(
                self.plate_period_px >= 2,
                Argument,
                "plate period must be at least 2 px"
            );
        }
        Ok(())
    }

    fn center(&self) -> f64 {
        (self.size_px as f64 - 1.0) / 2.0
    }

    pub fn outer_radius_px(&self) -> f64 {
        self.cortical_outer_frac * self.size_px as f64 / 2.0
    }

    pub fn inner_radius_px(&self) -> f64 {
        self.cortical_inner_frac * self.size_px as f64 / 2.0
    }

    fn radius_at(&self, x: usize, y: usize) -> f64 {
        let c = self.center();
        (x as f64 - c).hypot(y as f64 - c)
    }
}

/// Fraction of pixel `(x, y)` lying inside the centered circle of radius `r`.
fn disk_coverage(x: usize, y: usize, center: f64, r: f64) -> f64 {
    let mut hits = 0usize;
    for sy in 0..SUPERSAMPLE {
        let py = y as f64 + (sy as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5 - center;
        for sx in 0..SUPERSAMPLE {
            let px = x as f64 + (sx as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5 - center;
            if px * px + py * py < r * r {
                hits += 1;
            }
        }
    }
    hits as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64
}

fn box_blur_1d(src: &[f64], dst: &mut [f64], n: usize, stride: usize, count: usize, lane: usize) {
    // lane-th line of `count` lines, each of length n with element stride `stride`
    let r = LATTICE_BLUR_RADIUS as isize;
    let at = |i: usize| -> usize {
        if stride == 1 {
            lane * n + i
        } else {
            i * count + lane
        }
    };
    for i in 0..n {
        let mut acc = 0.0;
        for d in -r..=r {
            let j = (i as isize + d).clamp(0, n as isize - 1) as usize;
            acc += src[at(j)];
        }
        dst[at(i)] = acc / (2 * r + 1) as f64;
    }
}

fn lattice(spec: &PhantomSpec, marrow: &[bool]) -> Vec<bool> {
    let n = spec.size_px;
    let mut rng = rng::stream(spec.seed);
    let noise: Vec<f64> = (0..n * n).map(|_| rng::unit_f64(&mut rng)).collect();
    let mut tmp = vec![0.0; n * n];
    for row in 0..n {
        box_blur_1d(&noise, &mut tmp, n, 1, n, row);
    }
    let mut blurred = vec![0.0; n * n];
    for col in 0..n {
        box_blur_1d(&tmp, &mut blurred, n, n, n, col);
    }

    let mut idx: Vec<usize> = (0..n * n).filter(|&i| marrow[i]).collect();
    let k = (spec.trabecular_fill_frac * idx.len() as f64).round() as usize;
    idx.sort_by(|&a, &b| blurred[b].total_cmp(&blurred[a]).then(a.cmp(&b)));
    let mut solid = vec![false; n * n];
    for &i in &idx[..k] {
        solid[i] = true;
    }
    solid
}

pub fn make_phantom<T: Real>(spec: &PhantomSpec) -> Result<ImageGrid<T>> {
    spec.validate()?;
    let n = spec.size_px;
    let c = spec.center();
    let bg = spec.attenuation_background;
    let values: Vec<f64> = match spec.kind {
        PhantomKind::Disk => {
            let r = spec.outer_radius_px();
            let mut v = Vec::with_capacity(n * n);
            for y in 0..n {
                for x in 0..n {
                    let cov = disk_coverage(x, y, c, r);
                    v.push(bg + (spec.attenuation_cortical - bg) * cov);
                }
            }
            v
        }
        PhantomKind::Plates => {
            let p = spec.plate_period_px;
            let thick = p / 2;
            let mut v = Vec::with_capacity(n * n);
            for _ in 0..n {
                for x in 0..n {
                    v.push(if x % p < thick {
                        spec.attenuation_cortical
                    } else {
                        bg
                    });
                }
            }
            v
        }
        PhantomKind::Distal | PhantomKind::Diaphyseal => {
            let (r_out, r_in) = (spec.outer_radius_px(), spec.inner_radius_px());
            let marrow: Vec<bool> = (0..n * n)
                .map(|i| spec.radius_at(i % n, i / n) < r_in)
                .collect();
            let solid = lattice(spec, &marrow);
            let mut v = Vec::with_capacity(n * n);
            for y in 0..n {
                for x in 0..n {
                    let cov_out = disk_coverage(x, y, c, r_out);
                    let cov_in = disk_coverage(x, y, c, r_in);
                    let marrow_value = if solid[y * n + x] {
                        spec.attenuation_trabecular
                    } else {
                        bg
                    };
                    v.push(
                        (cov_out - cov_in) * spec.attenuation_cortical
                            + cov_in * marrow_value
                            + (1.0 - cov_out) * bg,
                    );
                }
            }
            v
        }
    };
    ImageGrid::new(
        n,
        n,
        spec.spacing_mm,
        values.into_iter().map(T::of).collect(),
    )
}

/// Ground-truth compartments by pixel-centre radius: cortical is
/// `r_in <= r < r_out`, trabecular is `r < r_in`.
pub fn make_mask_from_phantom(spec: &PhantomSpec) -> Result<(BinaryMask, BinaryMask)> {
    spec.validate()?;
    if !matches!(spec.kind, PhantomKind::Distal | PhantomKind::Diaphyseal) {
        return Err(Error::Unsupported(format!(
            "compartment masks need a distal or diaphyseal phantom, got {:?}",
            spec.kind
        )));
    }
    let n = spec.size_px;
    let (r_out, r_in) = (spec.outer_radius_px(), spec.inner_radius_px());
    let cortical = BinaryMask::from_fn(n, n, spec.spacing_mm, |x, y| {
        let r = spec.radius_at(x, y);
        r >= r_in && r < r_out
    });
    let trabecular = BinaryMask::from_fn(n, n, spec.spacing_mm, |x, y| spec.radius_at(x, y) < r_in);
    Ok((cortical, trabecular))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_matches_construction() {
        let spec = PhantomSpec::disk(128, 0.4, 1.0);
        assert!((spec.outer_radius_px() - 25.6).abs() < 1e-12);
        let img: ImageGrid<f64> = make_phantom(&spec).unwrap();
        // centre fully inside, far corner outside
        assert_eq!(img.get(63, 63), 1.0);
        assert_eq!(img.get(0, 0), 0.0);
        // total mass approximates pi r^2
        let area = std::f64::consts::PI * 25.6 * 25.6;
        assert!((img.sum() - area).abs() / area < 2e-3);
        // symmetric about (63.5, 63.5)
        for y in 0..128 {
            for x in 0..128 {
                assert_eq!(img.get(x, y), img.get(127 - x, y));
                assert_eq!(img.get(x, y), img.get(x, 127 - y));
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a: ImageGrid<f64> = make_phantom(&PhantomSpec::distal(64, 11)).unwrap();
        let b: ImageGrid<f64> = make_phantom(&PhantomSpec::distal(64, 11)).unwrap();
        let c: ImageGrid<f64> = make_phantom(&PhantomSpec::distal(64, 12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn distal_fill_fraction() {
        let spec = PhantomSpec::distal(128, 7);
        let img: ImageGrid<f64> = make_phantom(&spec).unwrap();
        let (_, marrow) = make_mask_from_phantom(&spec).unwrap();
        let half = spec.attenuation_trabecular / 2.0;
        let (mut solid, mut total) = (0usize, 0usize);
        for y in 0..128 {
            for x in 0..128 {
                if marrow.get(x, y) {
                    total += 1;
                    if img.get(x, y) > half {
                        solid += 1;
                    }
                }
            }
        }
        let frac = solid as f64 / total as f64;
        assert!(
            (frac - spec.trabecular_fill_frac).abs() <= 0.02,
            "fill {frac}"
        );
    }

    #[test]
    fn masks_disjoint_and_annulus_area() {
        for spec in [PhantomSpec::distal(128, 3), PhantomSpec::diaphyseal(256, 3)] {
            let (cort, trab) = make_mask_from_phantom(&spec).unwrap();
            assert_eq!(cort.width(), spec.size_px);
            assert_eq!(trab.height(), spec.size_px);
            assert!(cort.and(&trab).is_empty());
            let (ro, ri) = (spec.outer_radius_px(), spec.inner_radius_px());
            let analytic = std::f64::consts::PI * (ro * ro - ri * ri);
            let got = cort.count() as f64;
            assert!((got - analytic).abs() / analytic < 0.02, "{got} vs {analytic}");
        }
    }

    #[test]
    fn masks_unsupported_for_disk_and_plates() {
        assert!(matches!(
            make_mask_from_phantom(&PhantomSpec::disk(64, 0.4, 1.0)),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            make_mask_from_phantom(&PhantomSpec::plates(64, 10)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = PhantomSpec::distal(64, 0);
        s.cortical_inner_frac = 0.9;
        assert!(make_phantom::<f64>(&s).is_err());
        let mut s = PhantomSpec::distal(64, 0);
        s.cortical_outer_frac = 0.97;
        assert!(make_phantom::<f64>(&s).is_err());
        let mut s = PhantomSpec::distal(64, 0);
        s.trabecular_fill_frac = 1.5;
        assert!(matches!(make_phantom::<f64>(&s), Err(Error::Argument(_))));
    }

    #[test]
    fn attenuation_nonnegative() {
        for spec in [
            PhantomSpec::distal(64, 1),
            PhantomSpec::diaphyseal(64, 1),
            PhantomSpec::plates(64, 8),
            PhantomSpec::disk(64, 0.5, 2.0),
        ] {
            let img: ImageGrid<f32> = make_phantom(&spec).unwrap();
            assert!(img.values().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn plates_period() {
        let img: ImageGrid<f64> = make_phantom(&PhantomSpec::plates(40, 10)).unwrap();
        let row: Vec<f64> = img.row(3).to_vec();
        assert_eq!(&row[..10], &[1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(&row[10..20], &row[..10]);
    }
}
