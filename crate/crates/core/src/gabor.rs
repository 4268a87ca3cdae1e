//! Gabor kernels, quadrature-pair energy and the bank of energy channels that
//! COSFIRE subunits are selected from.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::convolve::FftCorrelator;
use crate::imaging::{convolve2d_direct, correlate_pair_fft, Border, Image, Kernel, DIRECT_KERNEL_AREA_LIMIT};
use crate::inhibition::{inhibit_group, InhibitionParams};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams<T> {
    /// Wavelength of the cosine carrier, pixels.
    pub lambda: T,
    /// Direction of the carrier (normal to the stripes), radians in `[0, π)`.
    pub theta: T,
    /// Spatial aspect ratio of the envelope.
    pub gamma: T,
    pub sigma_over_lambda: T,
    /// Phase offset, radians.
    pub psi: T,
}

impl<T: Real> GaborParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= T::of(2.0)) {
            return Err(Error::param(format!("lambda must be >= 2, got {}", self.lambda)));
        }
        if !(self.gamma > T::zero() && self.gamma <= T::one()) {
            return Err(Error::param(format!("gamma must be in (0, 1], got {}", self.gamma)));
        }
        if !(self.sigma_over_lambda > T::zero()) {
            return Err(Error::param("sigma_over_lambda must be positive"));
        }
        if !(self.theta >= T::zero() && self.theta < T::PI()) {
            return Err(Error::param(format!("theta must be in [0, pi), got {}", self.theta)));
        }
        if !self.psi.is_finite() {
            return Err(Error::param("psi must be finite"));
        }
        Ok(())
    }

    pub fn sigma(&self) -> T {
        self.sigma_over_lambda * self.lambda
    }

    pub fn support_radius(&self) -> usize {
        support_radius(self.sigma())
    }
}

fn support_radius<T: Real>(sigma: T) -> usize {
    (T::of(3.0) * sigma).ceil().to_usize().unwrap_or(0)
}

/// Sampled Gabor function, made DC-free and then scaled to unit L2 norm.
///
/// `g(x, y) = exp(−(x'² + γ²y'²) / 2σ²) · cos(2πx'/λ + ψ)` with
/// `x' = x cosθ + y sinθ`, `y' = −x sinθ + y cosθ`.
pub fn gabor_kernel<T: Real>(params: &GaborParams<T>) -> Result<Kernel<T>> {
    params.validate()?;
    let sigma = params.sigma();
    let radius = support_radius(sigma);
    let (sin_t, cos_t) = params.theta.sin_cos();
    let two_s2 = T::of(2.0) * sigma * sigma;
    let g2 = params.gamma * params.gamma;
    let k = T::of(2.0) * T::PI() / params.lambda;
    let raw = Kernel::from_fn(radius, |dx, dy| {
        let (x, y) = (T::of(dx as f64), T::of(dy as f64));
        let xr = x * cos_t + y * sin_t;
        let yr = -x * sin_t + y * cos_t;
        (-(xr * xr + g2 * yr * yr) / two_s2).exp() * (k * xr + params.psi).cos()
    });

    let n = T::of(raw.weights().len() as f64);
    let mean = raw.sum() / n;
    let centred: Vec<T> = raw.weights().iter().map(|&w| w - mean).collect();
    let norm = centred.iter().fold(T::zero(), |a, &w| a + w * w).sqrt();
    if !(norm > T::zero()) {
        return Err(Error::param("degenerate Gabor kernel"));
    }
    Kernel::new(radius, radius, centred.into_iter().map(|w| w / norm).collect())
}

/// Envelope parameters shared by all channels of a bank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope<T> {
    pub gamma: T,
    pub sigma_over_lambda: T,
}

fn quadrature_pair<T: Real>(lambda: T, theta: T, envelope: Envelope<T>) -> Result<(Kernel<T>, Kernel<T>)> {
    let params = GaborParams {
        lambda,
        theta,
        gamma: envelope.gamma,
        sigma_over_lambda: envelope.sigma_over_lambda,
        psi: T::zero(),
    };
    let even = gabor_kernel(&params)?;
    let odd = gabor_kernel(&GaborParams {
        psi: -T::FRAC_PI_2(),
        ..params
    })?;
    Ok((even, odd))
}

fn energy_from_pair<T: Real>(re: &Image<T>, im: &Image<T>, floor: T) -> Result<Image<T>> {
    re.zip_map(im, |a, b| {
        let e = a.hypot(b);
        if e <= floor {
            T::zero()
        } else {
            e
        }
    })
}

// Floating-point residue of the DC-free kernels on flat regions is not signal.
fn noise_floor<T: Real>(image: &Image<T>) -> T {
    let scale = image.data().iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    T::epsilon().sqrt() * scale
}

/// Quadrature energy `sqrt(even² + odd²)` using the ψ = 0 and ψ = −π/2 kernels.
/// Values at rounding-noise level (`√ε ×` the peak intensity) are reported as zero.
pub fn gabor_energy<T: Real>(
    image: &Image<T>,
    lambda: T,
    theta: T,
    envelope: Envelope<T>,
) -> Result<Image<T>> {
    Ok(energy_for_lambda(image, lambda, &[theta], envelope)?.remove(0))
}

/// Energy maps for every orientation at one wavelength; the padded image
/// spectrum is computed once and shared.
fn energy_for_lambda<T: Real>(
    image: &Image<T>,
    lambda: T,
    thetas: &[T],
    envelope: Envelope<T>,
) -> Result<Vec<Image<T>>> {
    let floor = noise_floor(image);
    let pairs = thetas
        .iter()
        .map(|&theta| quadrature_pair(lambda, theta, envelope))
        .collect::<Result<Vec<_>>>()?;
    let Some((first, _)) = pairs.first() else {
        return Ok(Vec::new());
    };
    if first.weights().len() <= DIRECT_KERNEL_AREA_LIMIT {
        return pairs
            .iter()
            .map(|(even, odd)| {
                let re = convolve2d_direct(image, even, Border::Mirror)?;
                let im = convolve2d_direct(image, odd, Border::Mirror)?;
                energy_from_pair(&re, &im, floor)
            })
            .collect();
    }
    if first.width() >= 2 * image.width() || first.height() >= 2 * image.height() {
        // Let the public entry point report the size error.
        let (even, odd) = &pairs[0];
        correlate_pair_fft(image, even, odd, Border::Mirror)?;
    }
    let (w, h) = image.dims();
    let mut corr = FftCorrelator::new(w, h, first.half_width(), first.half_height(), Border::Mirror);
    let signal = corr.signal_spectrum(image, None)?;
    pairs
        .iter()
        .map(|(even, odd)| {
            let filter = corr.kernel_spectrum(even, Some(odd))?;
            let (re, im) = corr.correlate(&signal, &filter)?;
            energy_from_pair(&re, &im, floor)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaborBank<T> {
    pub lambdas: Vec<T>,
    pub thetas: Vec<T>,
    pub gamma: T,
    pub sigma_over_lambda: T,
    /// Responses below `t1 ×` the stack-wide maximum are zeroed.
    pub t1: T,
}

impl<T: Real> Default for GaborBank<T> {
    fn default() -> Self {
        let root2 = std::f64::consts::SQRT_2;
        GaborBank {
            lambdas: [4.0, 4.0 * root2, 8.0, 8.0 * root2, 16.0]
                .into_iter()
                .map(T::of)
                .collect(),
            thetas: uniform_orientations(8),
            gamma: T::of(0.5),
            sigma_over_lambda: T::of(0.56),
            t1: T::of(0.1),
        }
    }
}

/// `n` orientations `kπ/n`, `k = 0..n`.
pub fn uniform_orientations<T: Real>(n: usize) -> Vec<T> {
    (0..n).map(|k| T::PI() * T::of(k as f64) / T::of(n as f64)).collect()
}

impl<T: Real> GaborBank<T> {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.thetas.is_empty() {
            return Err(Error::param("Gabor bank needs at least one wavelength and orientation"));
        }
        if self.lambdas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("bank wavelengths must be strictly increasing"));
        }
        for (i, a) in self.thetas.iter().enumerate() {
            if self.thetas[..i].iter().any(|b| b == a) {
                return Err(Error::param(format!("duplicate bank orientation {a}")));
            }
        }
        if !(self.t1 >= T::zero() && self.t1 <= T::one()) {
            return Err(Error::param(format!("t1 must be in [0, 1], got {}", self.t1)));
        }
        for &lambda in &self.lambdas {
            for &theta in &self.thetas {
                GaborParams {
                    lambda,
                    theta,
                    gamma: self.gamma,
                    sigma_over_lambda: self.sigma_over_lambda,
                    psi: T::zero(),
                }
                .validate()?;
            }
        }
        Ok(())
    }

    pub fn envelope(&self) -> Envelope<T> {
        Envelope {
            gamma: self.gamma,
            sigma_over_lambda: self.sigma_over_lambda,
        }
    }

    pub fn channel_count(&self) -> usize {
        self.lambdas.len() * self.thetas.len()
    }

    /// Largest kernel radius over the bank's wavelengths.
    pub fn max_support(&self) -> usize {
        self.lambdas
            .iter()
            .map(|&l| support_radius(self.sigma_over_lambda * l))
            .max()
            .unwrap_or(0)
    }

    /// Spacing of the orientation grid when it is uniform over `[0, π)`.
    pub fn orientation_step(&self) -> Option<T> {
        let n = self.thetas.len();
        let step = T::PI() / T::of(n as f64);
        let tol = T::of(1e-9);
        let mut sorted = self.thetas.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite orientations"));
        sorted
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - step * T::of(k as f64)).abs() < tol)
            .then_some(step)
    }
}

/// Energy maps for every `(λ, θ)` channel of a bank, stored λ-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyStack<T> {
    width: usize,
    height: usize,
    lambdas: Vec<T>,
    thetas: Vec<T>,
    maps: Vec<Image<T>>,
}

impl<T: Real> EnergyStack<T> {
    pub fn from_maps(lambdas: Vec<T>, thetas: Vec<T>, maps: Vec<Image<T>>) -> Result<Self> {
        if maps.len() != lambdas.len() * thetas.len() || maps.is_empty() {
            return Err(Error::input("energy stack needs one map per (lambda, theta)"));
        }
        let dims = maps[0].dims();
        if maps.iter().any(|m| m.dims() != dims) {
            return Err(Error::input("energy maps must share dimensions"));
        }
        if maps.iter().any(|m| m.data().iter().any(|&v| v < T::zero())) {
            return Err(Error::input("energy maps must be non-negative"));
        }
        Ok(EnergyStack {
            width: dims.0,
            height: dims.1,
            lambdas,
            thetas,
            maps,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn lambdas(&self) -> &[T] {
        &self.lambdas
    }

    pub fn thetas(&self) -> &[T] {
        &self.thetas
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[Image<T>] {
        &self.maps
    }

    #[inline]
    pub fn index(&self, lambda_index: usize, theta_index: usize) -> usize {
        lambda_index * self.thetas.len() + theta_index
    }

    /// `(λ, θ)` of a flat channel index.
    pub fn channel_params(&self, index: usize) -> (T, T) {
        let nt = self.thetas.len();
        (self.lambdas[index / nt], self.thetas[index % nt])
    }

    pub fn map(&self, index: usize) -> &Image<T> {
        &self.maps[index]
    }

    pub fn lambda_index(&self, lambda: T) -> Option<usize> {
        let tol = T::of(1e-9) * lambda.abs().max(T::one());
        self.lambdas.iter().position(|&l| (l - lambda).abs() <= tol)
    }

    /// Bank orientation closest to `theta` on the circle of period π.
    pub fn nearest_theta_index(&self, theta: T) -> usize {
        let pi = T::PI();
        let mut best = 0;
        let mut best_d = T::infinity();
        for (i, &t) in self.thetas.iter().enumerate() {
            let d = (theta - t).rem_euclid(&pi);
            let d = d.min(pi - d);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Flat index of the channel matching `(λ, θ)` exactly (up to rounding noise).
    pub fn channel_index(&self, lambda: T, theta: T) -> Option<usize> {
        let li = self.lambda_index(lambda)?;
        let ti = self.nearest_theta_index(theta);
        let pi = T::PI();
        let d = (theta - self.thetas[ti]).rem_euclid(&pi);
        (d.min(pi - d) <= T::of(1e-9)).then(|| self.index(li, ti))
    }

    pub fn global_max(&self) -> T {
        self.maps
            .iter()
            .map(|m| m.max_value())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Zeroes every value below `fraction ×` the stack-wide maximum.
    pub fn thresholded(mut self, fraction: T) -> Self {
        let cut = fraction * self.global_max();
        for m in &mut self.maps {
            for v in m.data_mut() {
                if *v < cut {
                    *v = T::zero();
                }
            }
        }
        self
    }
}

/// Energy (optionally surround-inhibited) for the bank's cross product of
/// wavelengths and orientations, then thresholded at `t1 ×` the stack maximum.
pub fn bank_responses<T: Real>(
    image: &Image<T>,
    bank: &GaborBank<T>,
    inhibition: Option<&InhibitionParams<T>>,
) -> Result<EnergyStack<T>> {
    bank.validate()?;
    if let Some(p) = inhibition {
        p.validate()?;
    }
    let envelope = bank.envelope();
    let groups = bank
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let energies = energy_for_lambda(image, lambda, &bank.thetas, envelope)?;
            match inhibition {
                Some(p) => inhibit_group(energies, p, lambda),
                None => Ok(energies),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let maps = groups.into_iter().flatten().collect();
    Ok(EnergyStack::from_maps(bank.lambdas.clone(), bank.thetas.clone(), maps)?.thresholded(bank.t1))
}
