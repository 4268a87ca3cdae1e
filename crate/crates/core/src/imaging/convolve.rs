use num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use super::{Image, Kernel};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// How pixels outside the raster are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Border {
    Zero,
    /// Reflection about the edge pixel, which is not repeated (`dcb|abcd|cba`).
    #[default]
    Mirror,
}

/// Kernels with at most this many taps go through the direct path in [`convolve2d`].
pub const DIRECT_KERNEL_AREA_LIMIT: usize = 81;

#[inline]
fn mirror_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

fn check_extent<T: Real>(image: &Image<T>, kernel: &Kernel<T>) -> Result<()> {
    if kernel.width() >= 2 * image.width() || kernel.height() >= 2 * image.height() {
        return Err(Error::input(format!(
            "kernel {}x{} too large for image {}x{}",
            kernel.width(),
            kernel.height(),
            image.width(),
            image.height()
        )));
    }
    Ok(())
}

/// Correlation `out(x, y) = Σ k(u, v) · in(x + u, y + v)` (kernel not flipped),
/// same-size output. Picks the direct or frequency-domain path by kernel size.
pub fn convolve2d<T: Real>(image: &Image<T>, kernel: &Kernel<T>, border: Border) -> Result<Image<T>> {
    if kernel.weights().len() <= DIRECT_KERNEL_AREA_LIMIT {
        convolve2d_direct(image, kernel, border)
    } else {
        convolve2d_fft(image, kernel, border)
    }
}

pub fn convolve2d_direct<T: Real>(
    image: &Image<T>,
    kernel: &Kernel<T>,
    border: Border,
) -> Result<Image<T>> {
    check_extent(image, kernel)?;
    let (w, h) = image.dims();
    let (hw, hh) = (kernel.half_width() as isize, kernel.half_height() as isize);
    let kw = kernel.width();
    let weights = kernel.weights();
    let src = image.data();
    let mut out = vec![T::zero(); w * h];

    for y in 0..h as isize {
        for x in 0..w as isize {
            let interior = x >= hw && y >= hh && x + hw < w as isize && y + hh < h as isize;
            let mut acc = T::zero();
            for v in -hh..=hh {
                let krow = &weights[(v + hh) as usize * kw..][..kw];
                let sy = y + v;
                if interior {
                    let row = &src[sy as usize * w + (x - hw) as usize..][..kw];
                    for (k, p) in krow.iter().zip(row) {
                        acc = acc + *k * *p;
                    }
                    continue;
                }
                for u in -hw..=hw {
                    let sx = x + u;
                    let p = match border {
                        Border::Zero => image.get_or_zero(sx, sy),
                        Border::Mirror => src[mirror_index(sy, h) * w + mirror_index(sx, w)],
                    };
                    acc = acc + krow[(u + hw) as usize] * p;
                }
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    Image::new(w, h, out)
}

pub fn convolve2d_fft<T: Real>(
    image: &Image<T>,
    kernel: &Kernel<T>,
    border: Border,
) -> Result<Image<T>> {
    let zeros = vec![T::zero(); kernel.weights().len()];
    let imag = Kernel::new(kernel.half_width(), kernel.half_height(), zeros)?;
    correlate_pair_fft(image, kernel, &imag, border).map(|(re, _)| re)
}

/// Correlates the image with two same-shape kernels in one frequency-domain pass,
/// packing them as the real and imaginary parts of a single complex kernel.
pub fn correlate_pair_fft<T: Real>(
    image: &Image<T>,
    first: &Kernel<T>,
    second: &Kernel<T>,
    border: Border,
) -> Result<(Image<T>, Image<T>)> {
    if first.half_width() != second.half_width() || first.half_height() != second.half_height() {
        return Err(Error::input("paired kernels must share their shape"));
    }
    check_extent(image, first)?;
    let mut corr = FftCorrelator::new(image.width(), image.height(), first.half_width(), first.half_height(), border);
    let signal = corr.signal_spectrum(image, None)?;
    let filter = corr.kernel_spectrum(first, Some(second))?;
    corr.correlate(&signal, &filter)
}

/// Frequency-domain correlation for one image size and kernel extent.
///
/// Spectra are reusable: one image spectrum can be correlated with many kernel
/// spectra and vice versa. Either side may pack two real inputs as real and
/// imaginary parts (but not both sides at once); the two results come back as
/// the real and imaginary parts of the output.
pub(crate) struct FftCorrelator<T: Real> {
    width: usize,
    height: usize,
    half_width: usize,
    half_height: usize,
    nw: usize,
    nh: usize,
    border: Border,
    planner: FftPlanner<T>,
}

impl<T: Real> FftCorrelator<T> {
    pub(crate) fn new(width: usize, height: usize, half_width: usize, half_height: usize, border: Border) -> Self {
        FftCorrelator {
            width,
            height,
            half_width,
            half_height,
            nw: fast_len(width + 2 * half_width),
            nh: fast_len(height + 2 * half_height),
            border,
            planner: FftPlanner::new(),
        }
    }

    pub(crate) fn signal_spectrum(&mut self, re: &Image<T>, im: Option<&Image<T>>) -> Result<Vec<Complex<T>>> {
        let (w, h) = (self.width, self.height);
        if re.dims() != (w, h) || im.is_some_and(|i| i.dims() != (w, h)) {
            return Err(Error::input("image size does not match the correlator"));
        }
        let (hw, hh, nw) = (self.half_width, self.half_height, self.nw);
        let mut signal = vec![Complex::new(T::zero(), T::zero()); nw * self.nh];
        for py in 0..h + 2 * hh {
            let sy = py as isize - hh as isize;
            for px in 0..w + 2 * hw {
                let sx = px as isize - hw as isize;
                let read = |img: &Image<T>| match self.border {
                    Border::Zero => img.get_or_zero(sx, sy),
                    Border::Mirror => img.get(mirror_index(sx, w), mirror_index(sy, h)),
                };
                let cell = &mut signal[py * nw + px];
                cell.re = read(re);
                if let Some(im) = im {
                    cell.im = read(im);
                }
            }
        }
        fft2d(&mut self.planner, &mut signal, nw, self.nh, FftDirection::Forward);
        Ok(signal)
    }

    pub(crate) fn kernel_spectrum(&mut self, re: &Kernel<T>, im: Option<&Kernel<T>>) -> Result<Vec<Complex<T>>> {
        let (hw, hh) = (self.half_width, self.half_height);
        let fits = |k: &Kernel<T>| k.half_width() == hw && k.half_height() == hh;
        if !fits(re) || im.is_some_and(|k| !fits(k)) {
            return Err(Error::input("kernel shape does not match the correlator"));
        }
        let (nw, nh) = (self.nw, self.nh);
        // Flipped kernel at wrapped indices turns circular convolution into correlation.
        let mut filt = vec![Complex::new(T::zero(), T::zero()); nw * nh];
        for v in -(hh as isize)..=hh as isize {
            for u in -(hw as isize)..=hw as isize {
                let ix = (-u).rem_euclid(nw as isize) as usize;
                let iy = (-v).rem_euclid(nh as isize) as usize;
                filt[iy * nw + ix] = Complex::new(re.at(u, v), im.map_or(T::zero(), |k| k.at(u, v)));
            }
        }
        fft2d(&mut self.planner, &mut filt, nw, nh, FftDirection::Forward);
        Ok(filt)
    }

    pub(crate) fn correlate(&mut self, signal: &[Complex<T>], filter: &[Complex<T>]) -> Result<(Image<T>, Image<T>)> {
        let (nw, nh) = (self.nw, self.nh);
        let mut prod: Vec<Complex<T>> = signal.iter().zip(filter).map(|(s, f)| *s * *f).collect();
        fft2d(&mut self.planner, &mut prod, nw, nh, FftDirection::Inverse);
        let (w, h, hw, hh) = (self.width, self.height, self.half_width, self.half_height);
        let scale = T::one() / T::of((nw * nh) as f64);
        let mut re = Vec::with_capacity(w * h);
        let mut im = Vec::with_capacity(w * h);
        for y in 0..h {
            for c in &prod[(y + hh) * nw + hw..][..w] {
                re.push(c.re * scale);
                im.push(c.im * scale);
            }
        }
        Ok((Image::new(w, h, re)?, Image::new(w, h, im)?))
    }
}

fn fft2d<T: Real>(
    planner: &mut FftPlanner<T>,
    buf: &mut [Complex<T>],
    nw: usize,
    nh: usize,
    direction: FftDirection,
) {
    planner.plan_fft(nw, direction).process(buf);
    let mut cols = transpose(buf, nw, nh);
    planner.plan_fft(nh, direction).process(&mut cols);
    buf.copy_from_slice(&transpose(&cols, nh, nw));
}

fn transpose<T: Copy>(src: &[T], width: usize, height: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(src.len());
    for x in 0..width {
        for y in 0..height {
            out.push(src[y * width + x]);
        }
    }
    out
}

/// Smallest 2^a·3^b·5^c not below `n`.
fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
