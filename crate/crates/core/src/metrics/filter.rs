/// Normalised 1D Gaussian of odd length `n`.
pub(crate) fn gaussian_kernel(n: usize, sigma: f64) -> Vec<f64> {
    let c = (n as f64 - 1.0) / 2.0;
    let k: Vec<f64> = (0..n)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Plane of f64 samples, row-major.
#[derive(Clone, Debug)]
pub(crate) struct Plane {
    pub w: usize,
    pub h: usize,
    pub v: Vec<f64>,
}

impl Plane {
    pub fn map2(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        Plane {
            w: self.w,
            h: self.h,
            v: self.v.iter().zip(&other.v).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Separable correlation keeping only fully covered positions.
    pub fn filter_valid(&self, k: &[f64]) -> Plane {
        let n = k.len();
        let (ow, oh) = (self.w + 1 - n, self.h + 1 - n);
        let mut tmp = vec![0.0; ow * self.h];
        for y in 0..self.h {
            let row = &self.v[y * self.w..(y + 1) * self.w];
            for x in 0..ow {
                tmp[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
            }
        }
        let mut out = vec![0.0; ow * oh];
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = 0.0;
                for (i, kv) in k.iter().enumerate() {
                    acc += kv * tmp[(y + i) * ow + x];
                }
                out[y * ow + x] = acc;
            }
        }
        Plane { w: ow, h: oh, v: out }
    }

    /// Keep every second sample in both directions, starting at 0.
    pub fn decimate(&self) -> Plane {
        let (w, h) = (self.w.div_ceil(2), self.h.div_ceil(2));
        let mut v = Vec::with_capacity(w * h);
        for y in (0..self.h).step_by(2) {
            for x in (0..self.w).step_by(2) {
                v.push(self.v[y * self.w + x]);
            }
        }
        Plane { w, h, v }
    }
}

impl<T: crate::scalar::Real> From<&crate::grid::ImageGrid<T>> for Plane {
    fn from(img: &crate::grid::ImageGrid<T>) -> Self {
        Plane {
            w: img.width(),
            h: img.height(),
            v: img.values().iter().map(|v| v.as_f64()).collect(),
        }
    }
}
