//! Full-reference image quality metrics and Sobel edge extraction.

mod filter;
mod psnr;
mod sobel;
mod ssim;
mod vif;

pub use psnr::{mse, psnr};
pub use sobel::{sobel_edges, sobel_magnitude};
pub use ssim::{ssim, SsimParams};
pub use vif::{vif, VifParams};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::scalar::Real;

/// `max - min` of the reference; attenuation units carry no fixed range.
pub fn data_range_of<T: Real>(reference: &ImageGrid<T>) -> Result<f64> {
    let (lo, hi) = reference.min_max();
    let r = (hi - lo).as_f64();
    if r > 0.0 {
        Ok(r)
    } else {
        Err(Error::Argument(
            "reference image is constant; supply an explicit data range".into(),
        ))
    }
}

pub(crate) fn check_same_shape<T: Real>(a: &ImageGrid<T>, b: &ImageGrid<T>) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "image shapes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(serialize_with = "ser_db", deserialize_with = "de_db")]
    pub psnr_db: f64,
    pub ssim: f64,
    pub vif: f64,
}

/// Infinite PSNR is written as the string `"inf"`.
pub fn format_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

fn ser_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&format_db(*v))
    }
}

fn de_db<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Db {
        Num(f64),
        Text(String),
    }
    match Db::deserialize(d)? {
        Db::Num(v) => Ok(v),
        Db::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Db::Text(t) => Err(serde::de::Error::custom(format!("bad dB value {t:?}"))),
    }
}

/// PSNR, SSIM and VIF with default parameters. `data_range` defaults to the
/// reference's dynamic range.
pub fn evaluate<T: Real>(
    reference: &ImageGrid<T>,
    test: &ImageGrid<T>,
    data_range: Option<f64>,
) -> Result<MetricReport> {
    let range = match data_range {
        Some(r) => r,
        None => data_range_of(reference)?,
    };
    Ok(MetricReport {
        psnr_db: psnr(reference, test, range)?,
        ssim: ssim(reference, test, &SsimParams::with_range(range))?,
        vif: vif(reference, test, &VifParams::with_range(range))?,
    })
}
