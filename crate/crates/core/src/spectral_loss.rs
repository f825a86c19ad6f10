//! Spectral regularization loss and its exact gradient with respect to pixels.
//!
//! The loss compares the normalized azimuthal profile of an image with the
//! mean profile of real images through a binary cross entropy over bins
//! `1..L`. Bin 0 is 1 for every normalized profile and is skipped; the sum is
//! still divided by `L - 1`.
//!
//! Gradient chain, for an `M x M` image with spectrum `F`:
//!
//! ```text
//! dL/dAI_i   = dL/dout_i / AI_0                        (i >= 1)
//! dL/dAI_0   = -sum_i dL/dout_i * AI_i / AI_0^2
//! dL/dP(k,l) = dL/dAI_bin(k,l)                         (0 when the bin is dropped)
//! dL/dI(m,n) = 2 Re sum_{k,l} dL/dP(k,l) F(k,l) exp(+2 pi i (k m + l n) / M)
//! ```
//!
//! where the last line is one unnormalized inverse FFT. Bins whose ratio is
//! outside the clamp interval have zero derivative.

use crate::features::{resample_values, FeatureVector};
use crate::spectrum::{self, coefficient_bin};
use crate::{Error, GrayImage, Result};

pub const CLAMP_LO: f64 = 1e-8;
pub const CLAMP_HI: f64 = 1.0 - 1e-7;

/// Mean normalized profile of real images, each bin in `[1e-8, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceProfile {
    values: Vec<f64>,
    n_source: usize,
}

impl ReferenceProfile {
    /// Clamps `values` into `[1e-8, 1]`.
    pub fn new(values: Vec<f64>, n_source: usize) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::shape("reference profile needs at least 2 bins"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::shape("non-finite reference value"));
        }
        let values = values.into_iter().map(|v| v.clamp(CLAMP_LO, 1.0)).collect();
        Ok(Self { values, n_source })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    /// Linear resampling to `len` bins, e.g. to an image's native radial length.
    pub fn resampled(&self, len: usize) -> Result<Self> {
        Self::new(resample_values(&self.values, len)?, self.n_source)
    }
}

pub fn mean_real_profile(real_features: &[FeatureVector]) -> Result<ReferenceProfile> {
    let stats = spectrum::ai_stats(
        &real_features
            .iter()
            .map(|f| f.values.as_slice())
            .collect::<Vec<_>>(),
    )?;
    ReferenceProfile::new(stats.mean, stats.count)
}

fn check_pair(out: &[f64], reference: &[f64]) -> Result<()> {
    if out.len() != reference.len() {
        return Err(Error::shape(format!(
            "profile lengths differ: {} vs {}",
            out.len(),
            reference.len()
        )));
    }
    if out.len() < 2 {
        return Err(Error::shape("BCE needs at least 2 bins"));
    }
    Ok(())
}

/// `-(1/(L-1)) sum_{i>=1} [ref_i ln(out_i) + (1 - ref_i) ln(1 - out_i)]`.
///
/// `out` is expected to be clamped already; bin 0 of either argument is ignored.
pub fn spectral_bce(out: &[f64], reference: &[f64]) -> Result<f64> {
    check_pair(out, reference)?;
    let n = (out.len() - 1) as f64;
    let sum: f64 = out[1..]
        .iter()
        .zip(&reference[1..])
        .map(|(&o, &r)| r * o.ln() + (1.0 - r) * (1.0 - o).ln())
        .sum();
    Ok(-sum / n)
}

/// Derivative of [`spectral_bce`] with respect to each `out_i` (0 for bin 0).
pub fn spectral_bce_grad(out: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    check_pair(out, reference)?;
    let n = (out.len() - 1) as f64;
    let mut g = vec![0.0; out.len()];
    for i in 1..out.len() {
        let (o, r) = (out[i], reference[i]);
        g[i] = -(r / o - (1.0 - r) / (1.0 - o)) / n;
    }
    Ok(g)
}

/// Total objective: generator loss plus weighted spectral loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub generator_loss: f64,
    pub spectral_loss: f64,
    pub lambda: f64,
    pub final_loss: f64,
}

pub fn combine_loss(generator_loss: f64, spectral: f64, lambda: f64) -> Result<LossBreakdown> {
    if !(lambda >= 0.0) {
        return Err(Error::usage(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(LossBreakdown {
        generator_loss,
        spectral_loss: spectral,
        lambda,
        final_loss: generator_loss + lambda * spectral,
    })
}

/// Loss value, pixel gradient and the intermediate profile.
#[derive(Debug, Clone)]
pub struct SpectralLossEval {
    pub loss: f64,
    pub grad: GrayImage,
    /// Normalized then clamped profile of the image.
    pub profile: Vec<f64>,
    /// `true` where the clamp was active (bin 0 is never flagged).
    pub clamped: Vec<bool>,
}

/// Normalized, clamped profile of a square image at native length `M/2`,
/// plus the clamp mask and the raw integral.
fn clamped_profile(img: &GrayImage) -> Result<(Vec<f64>, Vec<bool>, Vec<f64>)> {
    if !img.is_square() {
        return Err(Error::shape(format!(
            "spectral loss needs a square image, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let power = spectrum::power_spectrum(&spectrum::fft2(img));
    let raw = spectrum::azimuthal_integral(&power)?.into_values();
    let dc = raw[0];
    if !(dc > 0.0) {
        return Err(Error::DegenerateSpectrum(dc));
    }
    let mut out = vec![1.0; raw.len()];
    let mut clamped = vec![false; raw.len()];
    for i in 1..raw.len() {
        let r = raw[i] / dc;
        out[i] = r.clamp(CLAMP_LO, CLAMP_HI);
        clamped[i] = !(CLAMP_LO..=CLAMP_HI).contains(&r);
    }
    Ok((out, clamped, raw))
}

/// Loss only; cheaper than [`spectral_loss_value_and_grad`].
pub fn spectral_loss_value(img: &GrayImage, reference: &ReferenceProfile) -> Result<f64> {
    let (out, _, _) = clamped_profile(img)?;
    spectral_bce(&out, reference.values())
}

pub fn spectral_loss_value_and_grad(
    img: &GrayImage,
    reference: &ReferenceProfile,
) -> Result<SpectralLossEval> {
    let (out, clamped, raw) = clamped_profile(img)?;
    let loss = spectral_bce(&out, reference.values())?;
    let mut d_out = spectral_bce_grad(&out, reference.values())?;
    for (d, &c) in d_out.iter_mut().zip(&clamped) {
        if c {
            *d = 0.0;
        }
    }

    let dc = raw[0];
    let mut d_ai = vec![0.0; raw.len()];
    for i in 1..raw.len() {
        d_ai[i] = d_out[i] / dc;
        d_ai[0] -= d_out[i] * raw[i] / (dc * dc);
    }

    let size = img.width();
    let mut spec = spectrum::fft2(img);
    let len = d_ai.len();
    for k in 0..size {
        for l in 0..size {
            let bin = coefficient_bin(k, l, size, size);
            let g = if bin < len { d_ai[bin] } else { 0.0 };
            spec.data_mut()[k * size + l] *= g;
        }
    }
    let back = spectrum::ifft2_unnormalized(&spec);
    let grad = GrayImage::new(size, size, back.data().iter().map(|c| 2.0 * c.re).collect())?;
    Ok(SpectralLossEval {
        loss,
        grad,
        profile: out,
        clamped,
    })
}
