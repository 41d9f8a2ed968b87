use std::collections::VecDeque;

use crate::error::{ensure, Error, Result};
use crate::grid::{BinaryMask, ImageGrid};
use crate::scalar::Real;

/// 8-connected component labels (0 = background, labels from 1 in scan order)
/// and the size of each component.
pub fn connected_components(m: &BinaryMask) -> (Vec<usize>, Vec<usize>) {
    let (w, h) = (m.width(), m.height());
    let mut labels = vec![0usize; w * h];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !m.values()[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() + 1;
        labels[start] = label;
        queue.push_back(start);
        let mut size = 0;
        while let Some(p) = queue.pop_front() {
            size += 1;
            let (x, y) = ((p % w) as isize, (p / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if m.values()[q] && labels[q] == 0 {
                        labels[q] = label;
                        queue.push_back(q);
                    }
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Mask plus every background pixel not 4-connected to the grid border.
pub fn fill_holes(m: &BinaryMask) -> BinaryMask {
    let (w, h) = (m.width(), m.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) && !m.get(x, y) {
                outside[y * w + x] = true;
                queue.push_back(y * w + x);
            }
        }
    }
    while let Some(p) = queue.pop_front() {
        let (x, y) = (p % w, p / w);
        let mut visit = |q: usize| {
            if !m.values()[q] && !outside[q] {
                outside[q] = true;
                queue.push_back(q);
            }
        };
        if x > 0 {
            visit(p - 1);
        }
        if x + 1 < w {
            visit(p + 1);
        }
        if y > 0 {
            visit(p - w);
        }
        if y + 1 < h {
            visit(p + w);
        }
    }
    BinaryMask::from_fn(w, h, m.spacing_mm(), |x, y| !outside[y * w + x])
}

/// Global threshold (`value >= threshold` is solid), drop components under
/// `min_component_px`, then take the largest component as the cortical
/// shell and its enclosed holes as the trabecular compartment.
pub fn threshold_segment<T: Real>(
    img: &ImageGrid<T>,
    threshold: f64,
    min_component_px: usize,
) -> Result<(BinaryMask, BinaryMask)> {
    ensure!(threshold.is_finite(), Argument, "threshold must be finite");
    let solid = BinaryMask::like(img, |x, y| img.get(x, y).as_f64() >= threshold);
    let (labels, sizes) = connected_components(&solid);
    let largest = sizes
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= min_component_px.max(1))
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i + 1)
        .ok_or(Error::EmptySegmentation)?;
    let cortical = BinaryMask::like(img, |x, y| labels[y * img.width() + x] == largest);
    let trabecular = fill_holes(&cortical).and_not(&cortical);
    Ok((cortical, trabecular))
}
