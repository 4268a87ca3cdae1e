use std::path::Path;

use image::{imageops::FilterType, ImageFormat, ImageReader};

use super::{Image, RgbImage};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn open(path: &Path) -> Result<image::DynamicImage> {
    let reader = ImageReader::open(path)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Jpeg) => {}
        _ => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
            })
        }
    }
    reader.decode().map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Decodes a PNG or JPEG file into `[0, 1]` RGB.
pub fn load_rgb<T: Real>(path: &Path) -> Result<RgbImage<T>> {
    let rgb = open(path)?.to_rgb8();
    let (w, h) = rgb.dimensions();
    let scale = T::of(1.0 / 255.0);
    let pixels = rgb
        .pixels()
        .map(|p| {
            [
                T::of(p[0] as f64) * scale,
                T::of(p[1] as f64) * scale,
                T::of(p[2] as f64) * scale,
            ]
        })
        .collect();
    Ok(RgbImage {
        width: w as usize,
        height: h as usize,
        pixels,
    })
}

/// Decodes a PNG or JPEG file straight to luma, optionally shrinking it so the
/// longer side does not exceed `max_dimension`.
pub fn load_gray<T: Real>(path: &Path, max_dimension: Option<usize>) -> Result<Image<T>> {
    let rgb = load_rgb(path)?;
    let gray = super::to_grayscale(&rgb)?;
    match max_dimension {
        Some(m) => resize_max_dimension(&gray, m),
        None => Ok(gray),
    }
}

/// Box-filtered downscale so that `max(width, height) ≤ max_dimension`; images
/// already small enough are returned unchanged.
pub fn resize_max_dimension<T: Real>(image: &Image<T>, max_dimension: usize) -> Result<Image<T>> {
    if max_dimension == 0 {
        return Err(Error::param("resize max dimension must be positive"));
    }
    let (w, h) = image.dims();
    let longest = w.max(h);
    if longest <= max_dimension {
        return Ok(image.clone());
    }
    let scale = max_dimension as f64 / longest as f64;
    let nw = ((w as f64 * scale).round() as u32).max(1);
    let nh = ((h as f64 * scale).round() as u32).max(1);
    let buf = image::ImageBuffer::<image::Luma<f32>, Vec<f32>>::from_raw(
        w as u32,
        h as u32,
        image.data().iter().map(|v| v.as_f64() as f32).collect(),
    )
    .ok_or_else(|| Error::input("image buffer size mismatch"))?;
    let small = image::imageops::resize(&buf, nw, nh, FilterType::Triangle);
    Image::new(
        nw as usize,
        nh as usize,
        small.into_raw().into_iter().map(|v| T::of(v as f64)).collect(),
    )
}

/// Writes an intensity raster as 8-bit PNG, clamping to `[0, 1]`.
pub fn save_gray_png<T: Real>(image: &Image<T>, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = image
        .data()
        .iter()
        .map(|v| (v.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let buf = image::GrayImage::from_raw(image.width() as u32, image.height() as u32, bytes)
        .ok_or_else(|| Error::input("image buffer size mismatch"))?;
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}
