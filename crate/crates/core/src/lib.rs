//! Spectral forensics on 2D rasters.
//!
//! The crate reduces images to 1D azimuthally integrated power spectra, uses
//! those profiles to separate natural images from images produced by
//! up-convolution (transposed convolution or interpolation followed by a
//! convolution), and exposes a spectral regularization loss with an exact
//! pixel gradient.
//!
//! Module map:
//!
//! * [`spectrum`]: 2D DFT/FFT, power spectrum, azimuthal integral.
//! * [`resample`]: zero insertion, interpolation upsampling, convolution.
//! * [`features`]: image to fixed-length feature vector pipeline.
//! * [`classify`]: linear SVM, logistic regression, 2-means, evaluation.
//! * [`spectral_loss`]: binary cross entropy on profiles with gradient.
//! * [`synth`]: synthetic 1/f corpus with up-convolved fakes.
//! * [`ingest`]: dataset scanning, netpbm decoding, splits, feature cache.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
mod error;
pub mod features;
pub mod image;
pub mod ingest;
pub mod resample;
pub mod spectral_loss;
pub mod spectrum;
pub mod synth;

pub use error::{Error, Result};
pub use image::{GrayImage, Raster, RgbImage};
