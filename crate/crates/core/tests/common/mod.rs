#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sinoforge::grid::{ImageGrid, ProjectionGeometry, Sinogram};
use sinoforge::projector::radon_forward;

/// Dense system matrix, one row per (view, detector), one column per pixel,
/// assembled by projecting indicator images.
pub fn dense_matrix(geom: &ProjectionGeometry, w: usize, h: usize, spacing: f64) -> Vec<Vec<f64>> {
    let n_rows = geom.n_angles * geom.n_detectors;
    let mut a = vec![vec![0.0; w * h]; n_rows];
    for j in 0..w * h {
        let mut v = vec![0.0; w * h];
        v[j] = 1.0;
        let img = ImageGrid::new(w, h, spacing, v).unwrap();
        let col = radon_forward(&img, geom).unwrap();
        for (i, &x) in col.values().iter().enumerate() {
            a[i][j] = x;
        }
    }
    a
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn matvec_t(a: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a[0].len()];
    for (row, &yi) in a.iter().zip(y) {
        for (o, &p) in out.iter_mut().zip(row) {
            *o += p * yi;
        }
    }
    out
}

/// Inscribed-circle support computed from pixel centres.
pub fn circle_support(w: usize, h: usize) -> Vec<bool> {
    let r = w.min(h) as f64 / 2.0;
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    (0..w * h)
        .map(|k| {
            let (dx, dy) = ((k % w) as f64 - cx, (k / w) as f64 - cy);
            dx * dx + dy * dy <= r * r
        })
        .collect()
}

/// Textbook SIRT on the dense matrix with the same support and weights.
pub fn dense_sirt(a: &[Vec<f64>], b: &[f64], support: &[bool], iters: usize, relax: f64, nonneg: bool) -> Vec<f64> {
    let inv = |v: f64| if v > 0.0 { 1.0 / v } else { 0.0 };
    let row_w: Vec<f64> = a
        .iter()
        .map(|row| inv(row.iter().zip(support).filter(|(_, &s)| s).map(|(p, _)| p).sum()))
        .collect();
    let col_w: Vec<f64> = (0..support.len())
        .map(|j| if support[j] { inv(a.iter().map(|row| row[j]).sum()) } else { 0.0 })
        .collect();
    let mut x = vec![0.0; support.len()];
    for _ in 0..iters {
        let ax = matvec(a, &x);
        let r: Vec<f64> = b.iter().zip(&ax).zip(&row_w).map(|((b, p), w)| (b - p) * w).collect();
        let g = matvec_t(a, &r);
        for j in 0..x.len() {
            x[j] += relax * col_w[j] * g[j];
            if nonneg && x[j] < 0.0 {
                x[j] = 0.0;
            }
        }
    }
    x
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Worst per-view relative L2 error of a disk sinogram against the chord
/// length `2 sqrt(r^2 - rho^2)`.
pub fn disk_chord_error(sino: &Sinogram<f64>, radius_mm: f64, value: f64) -> f64 {
    let nd = sino.n_detectors();
    let d = sino.detector_spacing_mm();
    let expect: Vec<f64> = (0..nd)
        .map(|k| {
            let rho = (k as f64 - (nd as f64 - 1.0) / 2.0) * d;
            value * 2.0 * (radius_mm * radius_mm - rho * rho).max(0.0).sqrt()
        })
        .collect();
    (0..sino.n_views()).map(|i| rel_l2(sino.view(i), &expect)).fold(0.0, f64::max)
}

/// Every file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
