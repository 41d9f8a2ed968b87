use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::dataset::{read_manifest, ItemRecord};
use crate::error::{Error, Result};
use crate::grid::{read_image, ImageGrid};
use crate::metrics::{evaluate, format_db, MetricReport};

/// Which reconstruction to score against ground truth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Which {
    Corrupted,
    BlurMatched,
    Converged,
    /// Third-party outputs stored as `<dir>/<item id>.{raw,json}`.
    External(PathBuf),
}

impl Which {
    fn role(&self) -> &'static str {
        match self {
            Which::Corrupted => "corrupted",
            Which::BlurMatched => "blur_matched",
            Which::Converged => "converged",
            Which::External(_) => "external",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub item_id: String,
    pub rotation_deg: f64,
    pub metrics: MetricReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// Column means in the order rotation_deg, psnr_db, ssim, vif.
    pub mean: [f64; 4],
    /// Sample standard deviations (n - 1), same order.
    pub sd: [f64; 4],
}

fn columns(r: &EvalRow) -> [f64; 4] {
    [r.rotation_deg, r.metrics.psnr_db, r.metrics.ssim, r.metrics.vif]
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if !mean.is_finite() {
        return (mean, f64::NAN);
    }
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl EvalReport {
    fn from_rows(rows: Vec<EvalRow>) -> Self {
        let mut mean = [0.0; 4];
        let mut sd = [0.0; 4];
        for c in 0..4 {
            let col: Vec<f64> = rows.iter().map(|r| columns(r)[c]).collect();
            (mean[c], sd[c]) = mean_sd(&col);
        }
        Self { rows, mean, sd }
    }

    /// Header, one row per item, then `mean` and `sd` footer rows.
    /// Infinite PSNR is written as `inf`.
    pub fn to_csv(&self) -> String {
        let fmt = |v: f64| if v.is_nan() { "nan".to_string() } else { format_db(v) };
        let mut out = String::from("item_id,rotation_deg,psnr_db,ssim,vif\n");
        let mut line = |id: &str, v: [f64; 4]| {
            let _ = writeln!(out, "{id},{},{},{},{}", fmt(v[0]), fmt(v[1]), fmt(v[2]), fmt(v[3]));
        };
        for r in &self.rows {
            line(&r.item_id, columns(r));
        }
        line("mean", self.mean);
        line("sd", self.sd);
        out
    }
}

fn score(item: &ItemRecord, root: &Path, which: &Which) -> Result<EvalRow> {
    let file = |role: &str| -> Result<PathBuf> {
        item.files
            .get(role)
            .map(|f| root.join(&f.path))
            .ok_or_else(|| Error::Validation(format!("manifest has no {role} image")))
    };
    let truth: ImageGrid<f64> = read_image(file("ground_truth")?)?;
    let test: ImageGrid<f64> = match which {
        Which::External(dir) => read_image(dir.join(&item.id))?,
        other => read_image(file(other.role())?)?,
    };
    Ok(EvalRow {
        item_id: item.id.clone(),
        rotation_deg: item.rotation_deg,
        metrics: evaluate(&truth, &test, None)?,
    })
}

/// Score every manifest item. All failing items are reported together.
pub fn evaluate_dataset(manifest: impl AsRef<Path>, which: &Which) -> Result<EvalReport> {
    let (manifest, root) = read_manifest(manifest)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for item in &manifest.items {
        match score(item, &root, which) {
            Ok(r) => rows.push(r),
            Err(e) => failures.push(e.in_item(&item.id)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Batch(failures));
    }
    if rows.is_empty() {
        return Err(Error::Validation("manifest lists no items".into()));
    }
    Ok(EvalReport::from_rows(rows))
}
