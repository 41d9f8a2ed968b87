use crate::error::{ensure, Result};
use crate::grid::ImageGrid;
use crate::scalar::Real;

/// `Gx^2 + Gy^2` of the 3x3 Sobel pair, replicating edge pixels.
pub fn sobel_edges<T: Real>(img: &ImageGrid<T>) -> Result<ImageGrid<T>> {
    ensure!(
        img.width() >= 3 && img.height() >= 3,
        Argument,
        "Sobel needs at least 3x3 pixels"
    );
    let (w, h) = (img.width() as isize, img.height() as isize);
    let at = |x: isize, y: isize| img.get(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize);
    let two = T::of(2.0);
    let mut out = Vec::with_capacity(img.values().len());
    for y in 0..h {
        for x in 0..w {
            let gx = (at(x + 1, y - 1) + two * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + two * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + two * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + two * at(x, y - 1) + at(x + 1, y - 1));
            out.push(gx * gx + gy * gy);
        }
    }
    img.with_values(out)
}

/// Gradient magnitude, the square root of [`sobel_edges`].
pub fn sobel_magnitude<T: Real>(img: &ImageGrid<T>) -> Result<ImageGrid<T>> {
    let sq = sobel_edges(img)?;
    let v = sq.values().iter().map(|v| v.sqrt()).collect();
    sq.with_values(v)
}
