use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use super::{BankContext, CosfireFilter, CosfireTuple};
use crate::error::{Error, Result};
use crate::gabor::EnergyStack;
use crate::imaging::{weighted_max_blur, Image};
use crate::scalar::Real;

/// Memoises blurred channels of one energy stack, keyed by channel and sigma,
/// so filters sharing subunits blur each channel once per image.
pub struct SubunitCache<'a, T> {
    stack: &'a EnergyStack<T>,
    blurred: RefCell<HashMap<(usize, u64), Rc<Image<T>>>>,
}

impl<'a, T: Real> SubunitCache<'a, T> {
    pub fn new(stack: &'a EnergyStack<T>) -> Self {
        SubunitCache {
            stack,
            blurred: RefCell::new(HashMap::new()),
        }
    }

    pub fn stack(&self) -> &EnergyStack<T> {
        self.stack
    }

    pub fn blurred(&self, channel: usize, sigma: T) -> Result<Rc<Image<T>>> {
        let key = (channel, sigma.as_f64().to_bits());
        if let Some(img) = self.blurred.borrow().get(&key) {
            return Ok(Rc::clone(img));
        }
        let img = Rc::new(weighted_max_blur(self.stack.map(channel), sigma)?);
        self.blurred.borrow_mut().insert(key, Rc::clone(&img));
        Ok(img)
    }
}

/// One subunit map together with the shift that moves its evidence onto the
/// keypoint: the subunit contributes `map(x + dx, y + dy)` at `(x, y)`.
pub struct ShiftedSubunit<'m, T> {
    pub map: &'m Image<T>,
    pub dx: isize,
    pub dy: isize,
    pub weight: T,
}

/// `(Π vᵢ^ωᵢ)^(1/Σωᵢ)`, computed in log space; any zero value gives zero.
pub fn weighted_geometric_mean<T: Real>(values: &[T], weights: &[T]) -> T {
    assert_eq!(values.len(), weights.len(), "one weight per value");
    let mut log_sum = T::zero();
    let mut weight_sum = T::zero();
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for (&v, &w) in values.iter().zip(weights) {
        if !(v > T::zero()) {
            return T::zero();
        }
        log_sum = log_sum + w * v.ln();
        weight_sum = weight_sum + w;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(weight_sum > T::zero()) {
        return T::zero();
    }
    (log_sum / weight_sum).exp().max(lo).min(hi)
}

/// Pixel-wise weighted geometric mean of shifted subunit maps.
/// Reads outside a map count as zero.
pub fn combine_subunits<T: Real>(width: usize, height: usize, subunits: &[ShiftedSubunit<'_, T>]) -> Image<T> {
    if subunits.is_empty() {
        return Image::zeros(width, height);
    }
    let n = width * height;
    let mut log_sum = vec![T::zero(); n];
    let mut lo = vec![T::infinity(); n];
    let mut hi = vec![T::neg_infinity(); n];
    let mut dead = vec![false; n];
    let mut weight_sum = T::zero();

    for s in subunits {
        weight_sum = weight_sum + s.weight;
        for y in 0..height {
            let sy = y as isize + s.dy;
            for x in 0..width {
                let i = y * width + x;
                if dead[i] {
                    continue;
                }
                let v = s.map.get_or_zero(x as isize + s.dx, sy);
                if !(v > T::zero()) {
                    dead[i] = true;
                    continue;
                }
                log_sum[i] = log_sum[i] + s.weight * v.ln();
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
    }

    let data = (0..n)
        .map(|i| {
            if dead[i] || !(weight_sum > T::zero()) {
                T::zero()
            } else {
                (log_sum[i] / weight_sum).exp().max(lo[i]).min(hi[i])
            }
        })
        .collect();
    Image::new(width, height, data).expect("finite geometric mean")
}

fn resolve_channel<T: Real>(stack: &EnergyStack<T>, filter: &CosfireFilter<T>, tuple: &CosfireTuple<T>) -> Result<usize> {
    stack.channel_index(tuple.lambda, tuple.theta).ok_or_else(|| {
        Error::input(format!(
            "filter '{}' uses channel (lambda={}, theta={}) absent from the Gabor bank",
            filter.name, tuple.lambda, tuple.theta
        ))
    })
}

fn apply_rotated<T: Real>(cache: &SubunitCache<'_, T>, filter: &CosfireFilter<T>, psi: T) -> Result<Image<T>> {
    let stack = cache.stack();
    let mut maps = Vec::with_capacity(filter.tuples.len());
    let mut shifts = Vec::with_capacity(filter.tuples.len());
    for (tuple, rotated) in filter.tuples.iter().zip(filter.rotated_tuples(psi)) {
        let base = resolve_channel(stack, filter, tuple)?;
        let lambda_index = base / stack.thetas().len();
        let channel = stack.index(lambda_index, stack.nearest_theta_index(rotated.theta));
        maps.push(cache.blurred(channel, filter.blur_sigma(tuple.rho))?);
        let (sin_p, cos_p) = rotated.phi.sin_cos();
        shifts.push((
            (rotated.rho * cos_p).round().to_isize().unwrap_or(0),
            (rotated.rho * sin_p).round().to_isize().unwrap_or(0),
            filter.weighting.weight(tuple.rho),
        ));
    }
    let subunits: Vec<ShiftedSubunit<'_, T>> = maps
        .iter()
        .zip(&shifts)
        .map(|(m, &(dx, dy, weight))| ShiftedSubunit {
            map: m.as_ref(),
            dx,
            dy,
            weight,
        })
        .collect();
    let (w, h) = stack.dims();
    let response = combine_subunits(w, h, &subunits);
    let cut = filter.t3 * response.max_value();
    Ok(response.map(|v| if v < cut { T::zero() } else { v }))
}

/// Filter response over the stack's image: shifted, blurred subunits combined
/// by weighted geometric mean, then values below `t3 ×` the maximum zeroed.
pub fn apply_filter<T: Real>(cache: &SubunitCache<'_, T>, filter: &CosfireFilter<T>) -> Result<Image<T>> {
    apply_rotated(cache, filter, T::zero())
}

/// Pixel-wise maximum of the responses of the filter rotated by each `ψ`.
/// Rotated orientations snap to the nearest bank orientation.
pub fn rotation_tolerant_apply<T: Real>(
    cache: &SubunitCache<'_, T>,
    filter: &CosfireFilter<T>,
    psis: &[T],
) -> Result<Image<T>> {
    if psis.is_empty() {
        return Err(Error::param("rotation set must not be empty"));
    }
    let mut best: Option<Image<T>> = None;
    for &psi in psis {
        let r = apply_rotated(cache, filter, psi)?;
        best = Some(match best {
            None => r,
            Some(b) => b.zip_map(&r, |a, c| a.max(c))?,
        });
    }
    Ok(best.expect("non-empty psis"))
}

/// Convenience wrapper computing the energy stack of `image` first.
pub fn apply_filter_to_image<T: Real>(
    image: &Image<T>,
    filter: &CosfireFilter<T>,
    context: &BankContext<T>,
) -> Result<Image<T>> {
    let stack = context.responses(image)?;
    apply_filter(&SubunitCache::new(&stack), filter)
}
