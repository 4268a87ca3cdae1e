//! Isotropic surround suppression of Gabor energy.
//!
//! Each pixel loses `α ×` the energy average over an annulus around it, so
//! dense texture (whose surround is busy) fades while isolated contours keep
//! most of their energy.

use crate::error::{Error, Result};
use crate::imaging::convolve::FftCorrelator;
use crate::imaging::{convolve2d, Border, Image, Kernel, DIRECT_KERNEL_AREA_LIMIT};
use crate::scalar::Real;

/// Inner DoG sigma as a multiple of the channel wavelength.
pub const INNER_SIGMA_PER_LAMBDA: f64 = 0.56;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InhibitionParams<T> {
    /// Suppression strength α.
    pub alpha: T,
    /// Outer over inner sigma of the difference of Gaussians.
    pub surround_ratio: T,
}

impl<T: Real> Default for InhibitionParams<T> {
    fn default() -> Self {
        InhibitionParams {
            alpha: T::one(),
            surround_ratio: T::of(4.0),
        }
    }
}

impl<T: Real> InhibitionParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= T::zero()) || !self.alpha.is_finite() {
            return Err(Error::param(format!("inhibition alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.surround_ratio > T::one()) || !self.surround_ratio.is_finite() {
            return Err(Error::param(format!(
                "surround ratio must be > 1, got {}",
                self.surround_ratio
            )));
        }
        Ok(())
    }
}

/// Positive part of `G(σ_out) − G(σ_in)`, L1-normalised.
///
/// Support radius is `ceil(3σ_out)`, capped at `max_radius` when given; the
/// weights are normalised after truncation.
pub fn surround_kernel<T: Real>(sigma_in: T, ratio: T, max_radius: Option<usize>) -> Result<Kernel<T>> {
    if !(sigma_in > T::zero()) || !(ratio > T::one()) {
        return Err(Error::param("surround kernel needs sigma_in > 0 and ratio > 1"));
    }
    let sigma_out = ratio * sigma_in;
    let mut radius = (T::of(3.0) * sigma_out).ceil().to_usize().unwrap_or(1);
    if let Some(cap) = max_radius {
        radius = radius.min(cap);
    }
    let gauss = |d2: T, s: T| {
        let two_s2 = T::of(2.0) * s * s;
        (-d2 / two_s2).exp() / (T::PI() * two_s2)
    };
    let raw = Kernel::from_fn(radius, |dx, dy| {
        let d2 = T::of((dx * dx + dy * dy) as f64);
        (gauss(d2, sigma_out) - gauss(d2, sigma_in)).max(T::zero())
    });
    let total = raw.sum();
    if !(total > T::zero()) {
        return Err(Error::param(format!(
            "surround kernel of radius {radius} has no positive weight"
        )));
    }
    Kernel::new(
        radius,
        radius,
        raw.weights().iter().map(|&w| w / total).collect(),
    )
}

/// `max(0, E − α · (E ⊛ w))` with `w` the annular surround weight for wavelength `lambda`.
pub fn surround_inhibition<T: Real>(
    energy: &Image<T>,
    params: &InhibitionParams<T>,
    lambda: T,
) -> Result<Image<T>> {
    params.validate()?;
    Ok(inhibit_group(vec![energy.clone()], params, lambda)?.remove(0))
}

/// Inhibits several same-size energy maps of one wavelength, sharing the
/// kernel spectrum and correlating two maps per transform.
pub(crate) fn inhibit_group<T: Real>(
    energies: Vec<Image<T>>,
    params: &InhibitionParams<T>,
    lambda: T,
) -> Result<Vec<Image<T>>> {
    for energy in &energies {
        if let Some(i) = energy.data().iter().position(|&v| v < T::zero()) {
            return Err(Error::input(format!(
                "energy must be non-negative; found {} at ({}, {})",
                energy.data()[i],
                i % energy.width(),
                i / energy.width()
            )));
        }
    }
    if params.alpha == T::zero() || energies.is_empty() {
        return Ok(energies);
    }
    let (w, h) = energies[0].dims();
    if energies.iter().any(|e| e.dims() != (w, h)) {
        return Err(Error::input("energy maps differ in size"));
    }
    let cap = w.min(h) - 1;
    let kernel = surround_kernel(
        T::of(INNER_SIGMA_PER_LAMBDA) * lambda,
        params.surround_ratio,
        Some(cap.max(1)),
    )?;
    let alpha = params.alpha;
    let suppress = |e: &Image<T>, t: &Image<T>| e.zip_map(t, |e, t| (e - alpha * t.max(T::zero())).max(T::zero()));
    if kernel.weights().len() <= DIRECT_KERNEL_AREA_LIMIT {
        return energies
            .iter()
            .map(|e| suppress(e, &convolve2d(e, &kernel, Border::Mirror)?))
            .collect();
    }
    let mut corr = FftCorrelator::new(w, h, kernel.half_width(), kernel.half_height(), Border::Mirror);
    let filter = corr.kernel_spectrum(&kernel, None)?;
    let mut out = Vec::with_capacity(energies.len());
    for chunk in energies.chunks(2) {
        let signal = corr.signal_spectrum(&chunk[0], chunk.get(1))?;
        let (first, second) = corr.correlate(&signal, &filter)?;
        out.push(suppress(&chunk[0], &first)?);
        if let Some(e) = chunk.get(1) {
            out.push(suppress(e, &second)?);
        }
    }
    Ok(out)
}
