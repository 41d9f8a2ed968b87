//! Single-step in-plane rotation splices and 0/180 degree consistency scoring.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::grid::{ImageGrid, ProjectionGeometry, Sinogram};
use crate::projector::{project_views, rotate_image};
use crate::rng;
use crate::scalar::Real;

pub const DEFAULT_ANGLE_MIN_RAD: f64 = -std::f64::consts::PI / 20.0;
pub const DEFAULT_ANGLE_MAX_RAD: f64 = std::f64::consts::PI / 120.0;
pub const DEFAULT_SPAN_VIEWS: usize = 200;

/// The object snaps to `rotation_rad` for views `start_view..start_view + span_views`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionEvent {
    pub rotation_rad: f64,
    pub start_view: usize,
    pub span_views: usize,
}

impl MotionEvent {
    pub fn none() -> Self {
        Self {
            rotation_rad: 0.0,
            start_view: 0,
            span_views: 0,
        }
    }

    pub fn views(&self) -> std::ops::Range<usize> {
        self.start_view..self.start_view + self.span_views
    }

    pub fn validate(&self, n_views: usize) -> Result<()> {
        ensure!(
            self.rotation_rad.is_finite(),
            Argument,
            "rotation must be finite"
        );
        ensure!(
            self.start_view.checked_add(self.span_views).is_some_and(|e| e <= n_views)
                && (self.span_views == 0 || self.start_view < n_views),
            Argument,
            "views {}..{} exceed the {} available",
            self.start_view,
            self.start_view.saturating_add(self.span_views),
            n_views
        );
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionSamplerConfig {
    #[serde(default = "default_min")]
    pub angle_min_rad: f64,
    #[serde(default = "default_max")]
    pub angle_max_rad: f64,
    #[serde(default = "default_span")]
    pub span_views: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_min() -> f64 {
    DEFAULT_ANGLE_MIN_RAD
}
fn default_max() -> f64 {
    DEFAULT_ANGLE_MAX_RAD
}
fn default_span() -> usize {
    DEFAULT_SPAN_VIEWS
}

impl Default for MotionSamplerConfig {
    fn default() -> Self {
        Self {
            angle_min_rad: DEFAULT_ANGLE_MIN_RAD,
            angle_max_rad: DEFAULT_ANGLE_MAX_RAD,
            span_views: DEFAULT_SPAN_VIEWS,
            seed: 0,
        }
    }
}

impl MotionSamplerConfig {
    /// A degenerate range `min == max` is accepted and always yields that angle.
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.angle_min_rad.is_finite()
                && self.angle_max_rad.is_finite()
                && self.angle_min_rad <= self.angle_max_rad,
            Argument,
            "rotation range [{}, {}] is invalid",
            self.angle_min_rad,
            self.angle_max_rad
        );
        Ok(())
    }

    pub fn contains(&self, rotation_rad: f64) -> bool {
        (self.angle_min_rad..=self.angle_max_rad).contains(&rotation_rad)
    }
}

/// Rotation uniform on `[min, max]`, start uniform on `0..=n_views - span`.
pub fn sample_motion_event(cfg: &MotionSamplerConfig, geom: &ProjectionGeometry) -> Result<MotionEvent> {
    cfg.validate()?;
    let n = geom.n_angles;
    ensure!(
        cfg.span_views <= n,
        Argument,
        "span of {} views exceeds the {} available",
        cfg.span_views,
        n
    );
    let mut r = rng::stream(cfg.seed);
    let u = rng::unit_f64(&mut r);
    let rotation_rad = (cfg.angle_min_rad + u * (cfg.angle_max_rad - cfg.angle_min_rad))
        .clamp(cfg.angle_min_rad, cfg.angle_max_rad);
    let starts = n - cfg.span_views + 1;
    let start_view = ((rng::unit_f64(&mut r) * starts as f64) as usize).min(starts - 1);
    Ok(MotionEvent {
        rotation_rad,
        start_view,
        span_views: cfg.span_views,
    })
}

/// Replace the event's views of `clean` with projections of the rotated object.
pub fn inject_single_step_rotation<T: Real>(
    clean: &Sinogram<T>,
    img: &ImageGrid<T>,
    geom: &ProjectionGeometry,
    ev: &MotionEvent,
) -> Result<Sinogram<T>> {
    ensure!(
        clean.matches(geom),
        Argument,
        "sinogram does not match the acquisition geometry"
    );
    ev.validate(geom.n_angles)?;
    if ev.span_views == 0 {
        return Ok(clean.clone());
    }
    let rotated = rotate_image(img, ev.rotation_rad)?;
    let rows = project_views(&rotated, geom, ev.views())?;
    let mut out = clean.clone();
    let nd = geom.n_detectors;
    out.values_mut()[ev.start_view * nd..(ev.start_view + ev.span_views) * nd]
        .copy_from_slice(&rows);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyScore {
    pub ssd: f64,
    pub ncc: f64,
}

const ENDPOINT_TOL: f64 = 1e-12;

/// Compare the 0 view with the detector-reversed pi view.
pub fn consistency_score<T: Real>(sino: &Sinogram<T>) -> Result<ConsistencyScore> {
    let angles = sino.angles_rad();
    let find = |target: f64| angles.iter().position(|a| (a - target).abs() <= ENDPOINT_TOL);
    let (Some(i0), Some(i1)) = (find(0.0), find(std::f64::consts::PI)) else {
        return Err(Error::Geometry(
            "consistency scoring needs views at both 0 and pi".into(),
        ));
    };
    let p0: Vec<f64> = sino.view(i0).iter().map(|v| v.as_f64()).collect();
    let p1: Vec<f64> = sino.view(i1).iter().rev().map(|v| v.as_f64()).collect();
    let ssd = p0.iter().zip(&p1).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(ConsistencyScore {
        ssd,
        ncc: pearson(&p0, &p1),
    })
}

/// Pearson correlation; 0 when either side is constant.
fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}
