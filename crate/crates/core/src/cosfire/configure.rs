use super::apply::{apply_filter, SubunitCache};
use super::{ConfigSpec, CosfireFilter, CosfireTuple};
use crate::error::{Error, Result};
use crate::gabor::EnergyStack;
use crate::imaging::Image;
use crate::scalar::Real;

/// Local maxima of a circularly sampled signal.
///
/// Plateaus count once, at their midpoint (returned as a fractional sample
/// index). A constant signal has no maxima.
pub fn circle_local_maxima<T: Real>(values: &[T]) -> Vec<T> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let start = (0..n)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite samples"))
        .expect("non-empty");
    let lowest = values[start];
    if values.iter().all(|&v| v == lowest) {
        return Vec::new();
    }
    // Walking from a global minimum, every plateau has both neighbours inside the walk.
    let at = |k: usize| values[(start + k) % n];
    let mut peaks = Vec::new();
    let mut k = 1;
    while k < n {
        let v = at(k);
        let mut end = k;
        while end + 1 < n && at(end + 1) == v {
            end += 1;
        }
        if v > at(k - 1) && v > at((end + 1) % n) {
            let mid = T::of(start as f64) + T::of((k + end) as f64) / T::of(2.0);
            peaks.push(mid.rem_euclid(&T::of(n as f64)));
        }
        k = end + 1;
    }
    peaks
}

fn channel_values<T: Real>(stack: &EnergyStack<T>, x: T, y: T) -> Vec<T> {
    stack.maps().iter().map(|m| m.sample_bilinear(x, y)).collect()
}

fn max_of<T: Real>(values: &[T]) -> T {
    values.iter().copied().fold(T::zero(), T::max)
}

/// Reads a filter off `prototype` around `keypoint`.
///
/// For each radius the circle is scanned for local maxima of the strongest
/// channel response; positions reaching `t2 ×` the strongest response in the
/// keypoint neighbourhood become subunit sites, and every channel reaching
/// `t2 ×` the site's strongest channel contributes a tuple.
pub fn configure_filter<T: Real>(
    prototype: &Image<T>,
    keypoint: (usize, usize),
    spec: &ConfigSpec<T>,
    name: &str,
    scene: &str,
) -> Result<CosfireFilter<T>> {
    spec.validate()?;
    let (kx, ky) = keypoint;
    let margin = spec.keypoint_margin();
    let (w, h) = prototype.dims();
    if kx < margin || ky < margin || kx + margin >= w || ky + margin >= h {
        return Err(Error::InvalidKeypoint {
            x: kx,
            y: ky,
            reason: format!("must keep {margin} px from every border of a {w}x{h} image"),
        });
    }

    let stack = spec.context.responses(prototype)?;
    let max_map = Image::from_fn(w, h, |x, y| {
        stack.maps().iter().map(|m| m.get(x, y)).fold(T::zero(), T::max)
    });

    let rmax = spec.max_radius();
    let reach = rmax.ceil().to_isize().unwrap_or(0);
    let mut neighbourhood_max = T::zero();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if T::of((dx * dx + dy * dy) as f64) <= rmax * rmax {
                let v = max_map.get((kx as isize + dx) as usize, (ky as isize + dy) as usize);
                neighbourhood_max = neighbourhood_max.max(v);
            }
        }
    }
    let site_threshold = spec.t2 * neighbourhood_max;
    let (kxf, kyf) = (T::of(kx as f64), T::of(ky as f64));

    let mut sites: Vec<(T, T)> = Vec::new();
    for &rho in &spec.radii {
        if rho == T::zero() {
            let v = max_map.get(kx, ky);
            if v > T::zero() && v >= site_threshold {
                sites.push((T::zero(), T::zero()));
            }
            continue;
        }
        let samples = (T::TAU() / spec.angular_step).round().to_usize().unwrap_or(1).max(1);
        let step = T::TAU() / T::of(samples as f64);
        let ring: Vec<T> = (0..samples)
            .map(|j| {
                let phi = step * T::of(j as f64);
                let (s, c) = phi.sin_cos();
                max_of(&channel_values(&stack, kxf + rho * c, kyf + rho * s))
            })
            .collect();
        for peak in circle_local_maxima(&ring) {
            let phi = (peak * step).rem_euclid(&T::TAU());
            let (s, c) = phi.sin_cos();
            let v = max_of(&channel_values(&stack, kxf + rho * c, kyf + rho * s));
            if v > T::zero() && v >= site_threshold {
                sites.push((rho, phi));
            }
        }
    }

    let mut tuples = Vec::new();
    for &(rho, phi) in &sites {
        let (s, c) = phi.sin_cos();
        let values = channel_values(&stack, kxf + rho * c, kyf + rho * s);
        let cut = spec.t2 * max_of(&values);
        for (index, &v) in values.iter().enumerate() {
            if v > T::zero() && v >= cut {
                let (lambda, theta) = stack.channel_params(index);
                tuples.push(CosfireTuple { lambda, theta, rho, phi });
            }
        }
    }
    if tuples.is_empty() {
        return Err(Error::ConfigurationFailed {
            name: name.to_string(),
            reason: format!("no subunit passes t2 = {} around ({kx}, {ky})", spec.t2),
        });
    }

    let mut filter = CosfireFilter {
        name: name.to_string(),
        scene: scene.to_string(),
        tuples,
        sigma0: spec.sigma0,
        alpha_blur: spec.alpha_blur,
        t2: spec.t2,
        t3: spec.t3,
        weighting: spec.weighting,
        prototype_response: T::one(),
    };
    let peak = apply_filter(&SubunitCache::new(&stack), &filter)?.max_value();
    if !(peak > T::zero()) {
        return Err(Error::ConfigurationFailed {
            name: name.to_string(),
            reason: "filter does not respond to its own prototype".into(),
        });
    }
    filter.prototype_response = peak;
    Ok(filter)
}
