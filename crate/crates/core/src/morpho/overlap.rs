use serde::{Deserialize, Serialize};

use super::edt::squared_distance_to;
use crate::error::{ensure, Error, Result};
use crate::grid::BinaryMask;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegReport {
    pub dice: f64,
    pub jaccard: f64,
    pub hausdorff_px: f64,
    pub hausdorff_mm: f64,
}

fn counts(a: &BinaryMask, b: &BinaryMask) -> Result<(usize, usize, usize)> {
    ensure!(
        a.same_shape(b),
        Argument,
        "mask shapes differ: {}x{} vs {}x{}",
        a.width(),
        a.height(),
        b.width(),
        b.height()
    );
    let (mut inter, mut na, mut nb) = (0, 0, 0);
    for (&x, &y) in a.values().iter().zip(b.values()) {
        na += x as usize;
        nb += y as usize;
        inter += (x && y) as usize;
    }
    Ok((inter, na, nb))
}

/// `2|A n B| / (|A| + |B|)`; 1 when both are empty.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let (i, na, nb) = counts(a, b)?;
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * i as f64 / (na + nb) as f64)
}

/// `|A n B| / |A u B|`; 1 when both are empty.
pub fn jaccard(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let (i, na, nb) = counts(a, b)?;
    let union = na + nb - i;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(i as f64 / union as f64)
}

/// Mask pixels with at least one 8-neighbour outside the mask or the grid.
pub fn boundary(m: &BinaryMask) -> BinaryMask {
    let (w, h) = (m.width() as isize, m.height() as isize);
    let inside = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h && m.get(x as usize, y as usize);
    BinaryMask::from_fn(m.width(), m.height(), m.spacing_mm(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        inside(x, y)
            && (-1..=1).any(|dy| (-1..=1).any(|dx| !inside(x + dx, y + dy)))
    })
}

/// Symmetric Hausdorff distance between the boundary sets, in pixels.
pub fn hausdorff(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    counts(a, b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::UndefinedInput(
            "Hausdorff distance needs two nonempty masks".into(),
        ));
    }
    let (ba, bb) = (boundary(a), boundary(b));
    let (w, h) = (a.width(), a.height());
    let to_b = squared_distance_to(bb.values(), w, h);
    let to_a = squared_distance_to(ba.values(), w, h);
    let directed = |from: &BinaryMask, dist: &[f64]| {
        from.values()
            .iter()
            .zip(dist)
            .filter(|(&on, _)| on)
            .fold(0.0f64, |m, (_, &d)| m.max(d))
    };
    Ok(directed(&ba, &to_b).max(directed(&bb, &to_a)).sqrt())
}

pub fn seg_report(a: &BinaryMask, b: &BinaryMask) -> Result<SegReport> {
    let hd = hausdorff(a, b)?;
    Ok(SegReport {
        dice: dice(a, b)?,
        jaccard: jaccard(a, b)?,
        hausdorff_px: hd,
        hausdorff_mm: hd * a.spacing_mm(),
    })
}
