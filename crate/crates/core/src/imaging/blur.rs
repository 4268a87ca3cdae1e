use super::Image;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gaussian-weighted maximum: `out(x, y) = max in(x − u, y − v) · G(u, v)` over
/// integer offsets with `u² + v² ≤ ceil(3σ)²`, where `G(0, 0) = 1`.
/// Offsets that fall outside the raster do not participate.
pub fn weighted_max_blur<T: Real>(image: &Image<T>, sigma: T) -> Result<Image<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::param(format!("blur sigma must be positive, got {sigma}")));
    }
    let radius = (T::of(3.0) * sigma).ceil().to_isize().unwrap_or(0);
    let two_s2 = T::of(2.0) * sigma * sigma;
    let mut offsets = Vec::new();
    for v in -radius..=radius {
        for u in -radius..=radius {
            let d2 = u * u + v * v;
            if d2 <= radius * radius {
                offsets.push((u, v, (-T::of(d2 as f64) / two_s2).exp()));
            }
        }
    }

    let (w, h) = image.dims();
    let (wi, hi) = (w as isize, h as isize);
    let src = image.data();
    let mut out = vec![T::zero(); w * h];
    let nonneg = src.iter().all(|&v| v >= T::zero());
    if nonneg && src.iter().filter(|&&v| v > T::zero()).count() * 2 < src.len() {
        // Sparse non-negative maps: scattering from the support gives the same maxima.
        for (i, &val) in src.iter().enumerate() {
            if val <= T::zero() {
                continue;
            }
            let (sx, sy) = ((i % w) as isize, (i / w) as isize);
            for &(u, v, g) in &offsets {
                let (x, y) = (sx + u, sy + v);
                if x < 0 || y < 0 || x >= wi || y >= hi {
                    continue;
                }
                let cell = &mut out[y as usize * w + x as usize];
                let cand = val * g;
                if cand > *cell {
                    *cell = cand;
                }
            }
        }
        return Image::new(w, h, out);
    }
    for y in 0..hi {
        for x in 0..wi {
            let interior = x >= radius && y >= radius && x + radius < wi && y + radius < hi;
            let mut best = T::neg_infinity();
            for &(u, v, g) in &offsets {
                let (sx, sy) = (x - u, y - v);
                if !interior && (sx < 0 || sy < 0 || sx >= wi || sy >= hi) {
                    continue;
                }
                let val = src[sy as usize * w + sx as usize] * g;
                if val > best {
                    best = val;
                }
            }
            out[y as usize * w + x as usize] = best;
        }
    }
    Image::new(w, h, out)
}
