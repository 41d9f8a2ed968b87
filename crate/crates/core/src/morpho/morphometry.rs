use serde::{Deserialize, Serialize};

use super::edt::squared_distance_to;
use crate::error::{ensure, Error, Result};
use crate::grid::{BinaryMask, ImageGrid};
use crate::scalar::Real;

/// Affine map from attenuation to density units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub slope: f64,
    pub intercept: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            slope: 1.0,
            intercept: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorphoReport {
    pub ct_th_mm: f64,
    pub tb_n_per_mm: f64,
    pub ct_bmd: f64,
    pub tb_bmd: f64,
}

/// Distance (px) from each mask pixel centre to the nearest pixel centre
/// outside the mask; the grid exterior counts as outside.
fn inner_distance(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = (mask.width(), mask.height());
    let (pw, ph) = (w + 2, h + 2);
    let mut outside = vec![true; pw * ph];
    for y in 0..h {
        for x in 0..w {
            outside[(y + 1) * pw + x + 1] = !mask.get(x, y);
        }
    }
    let sq = squared_distance_to(&outside, pw, ph);
    let mut d = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            d[y * w + x] = sq[(y + 1) * pw + x + 1].sqrt();
        }
    }
    d
}

/// Ridge pixels of the distance map: not smaller than both neighbours along
/// the (8-direction quantised) gradient, or an 8-neighbourhood maximum where
/// the gradient vanishes.
fn medial_axis(mask: &BinaryMask, d: &[f64]) -> Vec<usize> {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            d[(y * w + x) as usize]
        }
    };
    let mut ridge = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let here = at(x, y);
            if here <= 0.0 {
                continue;
            }
            let gx = at(x + 1, y) - at(x - 1, y);
            let gy = at(x, y + 1) - at(x, y - 1);
            let is_ridge = if gx.abs() < 1e-12 && gy.abs() < 1e-12 {
                (-1..=1).all(|dy| (-1..=1).all(|dx| here >= at(x + dx, y + dy)))
            } else {
                let theta = gy.atan2(gx);
                let sx = theta.cos().round() as isize;
                let sy = theta.sin().round() as isize;
                here >= at(x + sx, y + sy) && here >= at(x - sx, y - sy)
            };
            if is_ridge {
                ridge.push((y * w + x) as usize);
            }
        }
    }
    ridge
}

/// Twice the mean distance-map value on the medial axis, in mm.
pub fn cortical_thickness(cortical: &BinaryMask, spacing_mm: f64) -> Result<f64> {
    if cortical.is_empty() {
        return Err(Error::UndefinedInput("cortical mask is empty".into()));
    }
    ensure!(spacing_mm > 0.0, Argument, "spacing must be positive");
    let d = inner_distance(cortical);
    let ridge = medial_axis(cortical, &d);
    let mean = ridge.iter().map(|&i| d[i]).sum::<f64>() / ridge.len() as f64;
    Ok(2.0 * mean * spacing_mm)
}

/// Per-axis trabecular number (1/mm): along rows and along columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TbNAxes {
    pub along_rows: f64,
    pub along_columns: f64,
}

impl TbNAxes {
    pub fn mean(&self) -> f64 {
        (self.along_rows + self.along_columns) / 2.0
    }
}

/// Mean-intercept counts. On each axis every solid/void change between
/// neighbouring region pixels is a boundary crossing; the axis value is
/// `crossings / (2 * traversed length)`.
pub fn trabecular_number_axes(
    solid: &BinaryMask,
    region: &BinaryMask,
    spacing_mm: f64,
) -> Result<TbNAxes> {
    ensure!(solid.same_shape(region), Argument, "solid and region masks differ in shape");
    ensure!(spacing_mm > 0.0, Argument, "spacing must be positive");
    if region.is_empty() {
        return Err(Error::UndefinedInput("trabecular region is empty".into()));
    }
    let (w, h) = (region.width(), region.height());
    let is_solid = |x: usize, y: usize| solid.get(x, y) && region.get(x, y);
    let traversed = region.count() as f64 * spacing_mm;

    let mut crossings = 0usize;
    for y in 0..h {
        for x in 1..w {
            if region.get(x - 1, y) && region.get(x, y) && is_solid(x - 1, y) != is_solid(x, y) {
                crossings += 1;
            }
        }
    }
    let along_rows = crossings as f64 / (2.0 * traversed);

    let mut crossings = 0usize;
    for x in 0..w {
        for y in 1..h {
            if region.get(x, y - 1) && region.get(x, y) && is_solid(x, y - 1) != is_solid(x, y) {
                crossings += 1;
            }
        }
    }
    let along_columns = crossings as f64 / (2.0 * traversed);
    Ok(TbNAxes {
        along_rows,
        along_columns,
    })
}

/// Axis-averaged trabecular number (1/mm).
pub fn trabecular_number(solid: &BinaryMask, region: &BinaryMask, spacing_mm: f64) -> Result<f64> {
    Ok(trabecular_number_axes(solid, region, spacing_mm)?.mean())
}

/// `slope * mean(img over mask) + intercept`.
pub fn mean_bmd<T: Real>(img: &ImageGrid<T>, mask: &BinaryMask, cal: &Calibration) -> Result<f64> {
    ensure!(cal.slope > 0.0, Argument, "calibration slope must be positive");
    ensure!(mask.matches_image(img), Argument, "mask and image differ in shape");
    let mut inside = img.values().iter().zip(mask.values()).filter(|(_, &m)| m).map(|(v, _)| v.as_f64());
    let Some(first) = inside.next() else {
        return Err(Error::UndefinedInput("BMD mask is empty".into()));
    };
    // Shifted by the first sample so a uniform region averages exactly.
    let (mut dev, mut n) = (0.0, 1usize);
    for v in inside {
        dev += v - first;
        n += 1;
    }
    Ok(cal.slope * (first + dev / n as f64) + cal.intercept)
}

/// Otsu threshold of the image samples under `mask` (256 bins).
pub fn otsu_threshold<T: Real>(img: &ImageGrid<T>, mask: &BinaryMask) -> Result<f64> {
    let vals: Vec<f64> = img
        .values()
        .iter()
        .zip(mask.values())
        .filter(|(_, &m)| m)
        .map(|(v, _)| v.as_f64())
        .collect();
    if vals.is_empty() {
        return Err(Error::UndefinedInput("threshold mask is empty".into()));
    }
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Ok(hi);
    }
    const BINS: usize = 256;
    let width = (hi - lo) / BINS as f64;
    let mut hist = [0usize; BINS];
    for v in &vals {
        hist[(((v - lo) / width) as usize).min(BINS - 1)] += 1;
    }
    let total = vals.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0, mut best, mut best_var) = (0.0, 0.0, 0usize, -1.0);
    for (i, &c) in hist.iter().enumerate() {
        w0 += c as f64;
        sum0 += i as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let (m0, m1) = (sum0 / w0, (sum_all - sum0) / w1);
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best = i;
        }
    }
    Ok(lo + (best + 1) as f64 * width)
}

/// Ct.Th from the cortical mask, Tb.N from `img >= tb_threshold` inside the
/// trabecular mask (Otsu within the mask when no threshold is given), and
/// calibrated mean density of both compartments.
pub fn morpho_report<T: Real>(
    img: &ImageGrid<T>,
    cortical: &BinaryMask,
    trabecular: &BinaryMask,
    cal: &Calibration,
    tb_threshold: Option<f64>,
) -> Result<MorphoReport> {
    ensure!(
        cortical.matches_image(img) && trabecular.matches_image(img),
        Argument,
        "masks and image differ in shape"
    );
    let threshold = match tb_threshold {
        Some(t) => t,
        None => otsu_threshold(img, trabecular)?,
    };
    let solid = BinaryMask::like(img, |x, y| img.get(x, y).as_f64() >= threshold);
    Ok(MorphoReport {
        ct_th_mm: cortical_thickness(cortical, img.spacing_mm())?,
        tb_n_per_mm: trabecular_number(&solid, trabecular, img.spacing_mm())?,
        ct_bmd: mean_bmd(img, cortical, cal)?,
        tb_bmd: mean_bmd(img, trabecular, cal)?,
    })
}
