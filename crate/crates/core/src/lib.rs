//! Familiar-scene recognition for low-frame-rate egocentric photo streams.
//!
//! Scenes are recognised from characteristic background patterns. Each
//! pattern is captured by a trainable COSFIRE filter configured from a
//! prototype image and keypoint. Filters read surround-inhibited Gabor
//! energy, frames are labelled by a vote over responding filters, short
//! gaps in the label sequence are filled with a sliding window, and results
//! are scored with per-scene precision, recall and F-measure.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below name the `f64` and `f32` instantiations.
//!
//! Pipeline:
//!
//! 1. [`imaging`] decoding, grayscale, correlation and weighted-max blur.
//! 2. [`gabor`] quadrature Gabor energy over a bank of `(λ, θ)` channels.
//! 3. [`inhibition`] surround suppression of texture edges.
//! 4. [`cosfire`] filter configuration, application and the bank file.
//! 5. [`scene`] per-frame voting into scene labels.
//! 6. [`timeline`] hole filling and event segmentation.
//! 7. [`metrics`] precision / recall / F-measure.

pub mod cosfire;
pub mod error;
pub mod formats;
pub mod gabor;
pub mod imaging;
pub mod inhibition;
pub mod metrics;
mod scalar;
pub mod scene;
pub mod synth;
pub mod timeline;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GrayImage = imaging::Image<f64>;
pub type GrayImageF32 = imaging::Image<f32>;
pub type KernelF64 = imaging::Kernel<f64>;
pub type KernelF32 = imaging::Kernel<f32>;
pub type GaborBankF64 = gabor::GaborBank<f64>;
pub type GaborBankF32 = gabor::GaborBank<f32>;
pub type EnergyStackF64 = gabor::EnergyStack<f64>;
pub type EnergyStackF32 = gabor::EnergyStack<f32>;
pub type InhibitionParamsF64 = inhibition::InhibitionParams<f64>;
pub type CosfireFilterF64 = cosfire::CosfireFilter<f64>;
pub type CosfireFilterF32 = cosfire::CosfireFilter<f32>;
pub type ConfigSpecF64 = cosfire::ConfigSpec<f64>;
pub type ConfigSpecF32 = cosfire::ConfigSpec<f32>;
pub type SceneBankF64 = scene::SceneBank<f64>;
pub type SceneBankF32 = scene::SceneBank<f32>;
