//! Rasters, kernels and the two filtering primitives the rest of the crate
//! builds on: linear correlation and the Gaussian-weighted maximum blur.
//!
//! Coordinates follow the usual raster convention: `x` grows rightward,
//! `y` grows downward, origin at the top-left pixel.

mod blur;
pub(crate) mod convolve;
mod io;

pub use blur::weighted_max_blur;
pub use convolve::{
    convolve2d, convolve2d_direct, convolve2d_fft, correlate_pair_fft, Border,
    DIRECT_KERNEL_AREA_LIMIT,
};
pub use io::{load_gray, load_rgb, resize_max_dimension, save_gray_png};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Single-channel real-valued raster stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::input(format!("empty image {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::input(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite value at ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(Image { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, T::zero())
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Image {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Image { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    /// Pixel value, or zero outside the raster.
    #[inline]
    pub fn get_or_zero(&self, x: isize, y: isize) -> T {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            T::zero()
        } else {
            self.data[y as usize * self.width + x as usize]
        }
    }

    /// Bilinear sample at a sub-pixel position; zero outside the raster.
    pub fn sample_bilinear(&self, x: T, y: T) -> T {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (ix, iy) = (x0.to_isize().unwrap_or(isize::MIN), y0.to_isize().unwrap_or(isize::MIN));
        let one = T::one();
        self.get_or_zero(ix, iy) * (one - fx) * (one - fy)
            + self.get_or_zero(ix + 1, iy) * fx * (one - fy)
            + self.get_or_zero(ix, iy + 1) * (one - fx) * fy
            + self.get_or_zero(ix + 1, iy + 1) * fx * fy
    }

    pub fn max_value(&self) -> T {
        self.data
            .iter()
            .copied()
            .fold(T::neg_infinity(), |a, b| if b > a { b } else { a })
    }

    pub fn min_value(&self) -> T {
        self.data
            .iter()
            .copied()
            .fold(T::infinity(), |a, b| if b < a { b } else { a })
    }

    pub fn mean(&self) -> T {
        let sum = self.data.iter().fold(T::zero(), |a, &b| a + b);
        sum / T::of(self.data.len() as f64)
    }

    /// Location and value of the largest pixel; the first in raster order wins ties.
    pub fn argmax(&self) -> (usize, usize, T) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width, self.data[best])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::input(format!(
                "dimension mismatch: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(Image {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn cast<U: Real>(&self) -> Image<U> {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// Odd-sized correlation kernel, weights row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    half_width: usize,
    half_height: usize,
    weights: Vec<T>,
}

impl<T: Real> Kernel<T> {
    pub fn new(half_width: usize, half_height: usize, weights: Vec<T>) -> Result<Self> {
        let expected = (2 * half_width + 1) * (2 * half_height + 1);
        if weights.len() != expected {
            return Err(Error::input(format!(
                "kernel needs {expected} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::input("kernel weights must be finite"));
        }
        Ok(Kernel {
            half_width,
            half_height,
            weights,
        })
    }

    pub fn identity() -> Self {
        Kernel {
            half_width: 0,
            half_height: 0,
            weights: vec![T::one()],
        }
    }

    /// Square kernel of the given radius with weights `f(dx, dy)`.
    pub fn from_fn(radius: usize, f: impl Fn(isize, isize) -> T) -> Self {
        let r = radius as isize;
        let mut weights = Vec::with_capacity((2 * radius + 1).pow(2));
        for dy in -r..=r {
            for dx in -r..=r {
                weights.push(f(dx, dy));
            }
        }
        Kernel {
            half_width: radius,
            half_height: radius,
            weights,
        }
    }

    #[inline]
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    #[inline]
    pub fn half_height(&self) -> usize {
        self.half_height
    }

    #[inline]
    pub fn width(&self) -> usize {
        2 * self.half_width + 1
    }

    #[inline]
    pub fn height(&self) -> usize {
        2 * self.half_height + 1
    }

    #[inline]
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Weight at offset `(dx, dy)` from the kernel centre.
    #[inline]
    pub fn at(&self, dx: isize, dy: isize) -> T {
        let col = (dx + self.half_width as isize) as usize;
        let row = (dy + self.half_height as isize) as usize;
        self.weights[row * self.width() + col]
    }

    pub fn sum(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn l2_norm(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &b| a + b * b).sqrt()
    }
}

/// Three-channel raster, channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage<T> {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[T; 3]>,
}

/// Luma conversion with the ITU-R BT.601 weights.
pub fn to_grayscale<T: Real>(rgb: &RgbImage<T>) -> Result<Image<T>> {
    if rgb.width == 0 || rgb.height == 0 || rgb.pixels.is_empty() {
        return Err(Error::input("empty RGB image"));
    }
    if rgb.pixels.len() != rgb.width * rgb.height {
        return Err(Error::input(format!(
            "RGB pixel count {} does not match {}x{}",
            rgb.pixels.len(),
            rgb.width,
            rgb.height
        )));
    }
    let (wr, wg, wb) = (T::of(0.299), T::of(0.587), T::of(0.114));
    let data = rgb
        .pixels
        .iter()
        .map(|&[r, g, b]| wr * r + wg * g + wb * b)
        .collect();
    Image::new(rgb.width, rgb.height, data)
}
