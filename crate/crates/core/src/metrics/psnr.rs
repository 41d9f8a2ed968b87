use super::check_same_shape;
use crate::error::{ensure, Result};
use crate::grid::ImageGrid;
use crate::scalar::Real;

pub fn mse<T: Real>(reference: &ImageGrid<T>, test: &ImageGrid<T>) -> Result<f64> {
    check_same_shape(reference, test)?;
    let sum: f64 = reference
        .values()
        .iter()
        .zip(test.values())
        .map(|(a, b)| {
            let d = a.as_f64() - b.as_f64();
            d * d
        })
        .sum();
    Ok(sum / reference.values().len() as f64)
}

/// `10 log10(range^2 / MSE)`, infinite for identical images.
pub fn psnr<T: Real>(reference: &ImageGrid<T>, test: &ImageGrid<T>, data_range: f64) -> Result<f64> {
    ensure!(
        data_range.is_finite() && data_range > 0.0,
        Argument,
        "data range must be positive"
    );
    let e = mse(reference, test)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (data_range * data_range / e).log10())
}
