//! Trainable COSFIRE keypoint filters.
//!
//! A filter is a list of tuples `(λ, θ, ρ, φ)`: "energy in channel `(λ, θ)` is
//! expected at polar offset `(ρ, φ)` from the keypoint". Configuration reads
//! those tuples off a prototype image; application blurs each channel with a
//! Gaussian-weighted maximum, shifts the evidence onto the keypoint and takes
//! the weighted geometric mean, so the response is non-zero only where every
//! part of the pattern is present.
//!
//! Angles use raster coordinates: `φ = 0` points along `+x`, `φ = π/2` along
//! `+y` (downward).

mod apply;
mod bankfile;
mod configure;

pub use apply::{
    apply_filter, apply_filter_to_image, combine_subunits, rotation_tolerant_apply,
    weighted_geometric_mean, ShiftedSubunit, SubunitCache,
};
pub use bankfile::{load_bank, save_bank, bank_from_json, bank_to_json, BANK_FILE_VERSION};
pub use configure::{circle_local_maxima, configure_filter};

use crate::error::{Error, Result};
use crate::gabor::{bank_responses, EnergyStack, GaborBank};
use crate::imaging::Image;
use crate::inhibition::InhibitionParams;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosfireTuple<T> {
    pub lambda: T,
    pub theta: T,
    pub rho: T,
    pub phi: T,
}

/// How tuples are weighted in the geometric mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TupleWeighting<T> {
    Uniform,
    /// `ω = exp(−ρ² / 2σ̂²)`.
    Gaussian(T),
}

impl<T: Real> TupleWeighting<T> {
    pub fn weight(&self, rho: T) -> T {
        match *self {
            TupleWeighting::Uniform => T::one(),
            TupleWeighting::Gaussian(s) => (-(rho * rho) / (T::of(2.0) * s * s)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosfireFilter<T> {
    pub name: String,
    pub scene: String,
    pub tuples: Vec<CosfireTuple<T>>,
    pub sigma0: T,
    pub alpha_blur: T,
    pub t2: T,
    pub t3: T,
    pub weighting: TupleWeighting<T>,
    /// Peak response on the filter's own prototype.
    pub prototype_response: T,
}

impl<T: Real> CosfireFilter<T> {
    /// Blur sigma for a subunit at distance `rho` from the keypoint.
    pub fn blur_sigma(&self, rho: T) -> T {
        self.sigma0 + self.alpha_blur * rho
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::param(format!("filter '{}': {m}", self.name)));
        if self.tuples.is_empty() {
            return bad("no tuples".into());
        }
        for (i, t) in self.tuples.iter().enumerate() {
            if !(t.rho >= T::zero()) || !t.rho.is_finite() {
                return bad(format!("tuple {i}: rho = {} must be >= 0", t.rho));
            }
            if !(t.phi >= T::zero() && t.phi < T::TAU()) {
                return bad(format!("tuple {i}: phi = {} must be in [0, 2pi)", t.phi));
            }
            if !t.lambda.is_finite() || !t.theta.is_finite() {
                return bad(format!("tuple {i}: non-finite channel"));
            }
        }
        if !(self.sigma0 > T::zero()) {
            return bad(format!("sigma0 = {} must be > 0", self.sigma0));
        }
        if !(self.alpha_blur >= T::zero()) {
            return bad(format!("alpha_blur = {} must be >= 0", self.alpha_blur));
        }
        for (label, v) in [("t2", self.t2), ("t3", self.t3)] {
            if !(v >= T::zero() && v <= T::one()) {
                return bad(format!("{label} = {v} must be in [0, 1]"));
            }
        }
        if let TupleWeighting::Gaussian(s) = self.weighting {
            if !(s > T::zero()) {
                return bad(format!("weight sigma = {s} must be > 0"));
            }
        }
        if !(self.prototype_response > T::zero()) || !self.prototype_response.is_finite() {
            return bad(format!(
                "prototype_response = {} must be > 0",
                self.prototype_response
            ));
        }
        Ok(())
    }

    /// Tuple set rotated by `psi`: `θ + ψ` and `φ + ψ`, reduced to their ranges.
    pub fn rotated_tuples(&self, psi: T) -> Vec<CosfireTuple<T>> {
        self.tuples
            .iter()
            .map(|t| CosfireTuple {
                lambda: t.lambda,
                theta: (t.theta + psi).rem_euclid(&T::PI()),
                rho: t.rho,
                phi: (t.phi + psi).rem_euclid(&T::TAU()),
            })
            .collect()
    }
}

/// Gabor bank plus optional surround suppression: everything needed to turn
/// an image into the energy stack filters read from.
#[derive(Debug, Clone, PartialEq)]
pub struct BankContext<T> {
    pub gabor: GaborBank<T>,
    pub inhibition: Option<InhibitionParams<T>>,
}

impl<T: Real> Default for BankContext<T> {
    fn default() -> Self {
        BankContext {
            gabor: GaborBank::default(),
            inhibition: Some(InhibitionParams::default()),
        }
    }
}

impl<T: Real> BankContext<T> {
    pub fn responses(&self, image: &Image<T>) -> Result<EnergyStack<T>> {
        bank_responses(image, &self.gabor, self.inhibition.as_ref())
    }

    pub fn validate(&self) -> Result<()> {
        self.gabor.validate()?;
        if let Some(p) = &self.inhibition {
            p.validate()?;
        }
        Ok(())
    }
}

/// Parameters of automatic configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSpec<T> {
    /// Circle radii to scan, ascending, starting at 0.
    pub radii: Vec<T>,
    /// Angular sampling step along each circle, radians.
    pub angular_step: T,
    pub context: BankContext<T>,
    pub t2: T,
    pub t3: T,
    pub sigma0: T,
    pub alpha_blur: T,
    pub weighting: TupleWeighting<T>,
}

impl<T: Real> Default for ConfigSpec<T> {
    fn default() -> Self {
        ConfigSpec {
            radii: [0.0, 5.0, 10.0, 20.0].into_iter().map(T::of).collect(),
            angular_step: T::PI() / T::of(60.0),
            context: BankContext::default(),
            t2: T::of(0.75),
            t3: T::of(0.25),
            sigma0: T::of(0.67),
            alpha_blur: T::of(0.1),
            weighting: TupleWeighting::Uniform,
        }
    }
}

impl<T: Real> ConfigSpec<T> {
    pub fn validate(&self) -> Result<()> {
        self.context.validate()?;
        match self.radii.first() {
            Some(r) if *r == T::zero() => {}
            _ => return Err(Error::param("radii must start at 0")),
        }
        if self.radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("radii must be strictly ascending"));
        }
        if !(self.angular_step > T::zero() && self.angular_step <= T::PI() / T::of(8.0)) {
            return Err(Error::param(format!(
                "angular step {} must be in (0, pi/8]",
                self.angular_step
            )));
        }
        for (label, v) in [("t2", self.t2), ("t3", self.t3)] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::param(format!("{label} = {v} must be in [0, 1]")));
            }
        }
        if !(self.sigma0 > T::zero()) || !(self.alpha_blur >= T::zero()) {
            return Err(Error::param("sigma0 must be > 0 and alpha_blur >= 0"));
        }
        if let TupleWeighting::Gaussian(s) = self.weighting {
            if !(s > T::zero()) {
                return Err(Error::param("weight sigma must be > 0"));
            }
        }
        Ok(())
    }

    pub fn max_radius(&self) -> T {
        *self.radii.last().expect("validated radii")
    }

    /// Distance a keypoint must keep from every image border: the outermost
    /// circle plus the blur support of a subunit on it.
    pub fn keypoint_margin(&self) -> usize {
        let rmax = self.max_radius();
        let blur = T::of(3.0) * (self.sigma0 + self.alpha_blur * rmax);
        (rmax + blur).ceil().to_usize().unwrap_or(usize::MAX)
    }
}
