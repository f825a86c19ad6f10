//! Image to fixed-length spectral feature vector.
//!
//! grayscale -> centre square crop -> FFT -> DC-centred power -> azimuthal
//! integral -> division by bin 0 -> linear resampling to `target_len` bins.

use crate::classify::Label;
use crate::spectrum::{self, AiProfile};
use crate::{Error, GrayImage, Raster, Result, RgbImage};

pub const DEFAULT_TARGET_LEN: usize = 300;

/// ITU-R BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub target_len: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            target_len: DEFAULT_TARGET_LEN,
        }
    }
}

/// Normalized, resampled profile of one image plus its dataset metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub label: Option<Label>,
    pub group: Option<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(id: impl Into<String>, label: Option<Label>, values: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            label,
            group: None,
            values,
        }
    }

    pub fn with_group(mut self, group: impl Into<String>) -> Self {
        self.group = Some(group.into());
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn to_grayscale(rgb: &RgbImage) -> GrayImage {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = rgb
        .pixels()
        .iter()
        .map(|&[r, g, b]| wr * r + wg * g + wb * b)
        .collect();
    GrayImage::new(rgb.width(), rgb.height(), data).expect("same shape as a valid RGB image")
}

/// Gray rasters pass through untouched.
pub fn raster_to_gray(raster: &Raster) -> GrayImage {
    match raster {
        Raster::Gray(img) => img.clone(),
        Raster::Rgb(img) => to_grayscale(img),
    }
}

/// Largest centred square; odd margins leave the extra pixel at the bottom/right.
pub fn center_crop_square(img: &GrayImage) -> GrayImage {
    if img.is_square() {
        return img.clone();
    }
    let side = img.width().min(img.height());
    let x0 = (img.width() - side) / 2;
    let y0 = (img.height() - side) / 2;
    img.crop(x0, y0, side, side)
        .expect("square crop fits inside the image")
}

/// Linear interpolation onto `target_len` equally spaced positions over `[0, L-1]`.
pub fn resample_profile(ai: &AiProfile, target_len: usize) -> Result<AiProfile> {
    let values = resample_values(ai.values(), target_len)?;
    Ok(AiProfile::with_values(values, ai.is_normalized()))
}

pub(crate) fn resample_values(src: &[f64], target_len: usize) -> Result<Vec<f64>> {
    let len = src.len();
    if len < 2 || target_len < 2 {
        return Err(Error::usage(format!(
            "resampling needs at least 2 source and target bins, got {len} -> {target_len}"
        )));
    }
    let span = (len - 1) as f64;
    let denom = (target_len - 1) as f64;
    Ok((0..target_len)
        .map(|i| {
            let pos = i as f64 * span / denom;
            let j = (pos.floor() as usize).min(len - 2);
            let t = pos - j as f64;
            (1.0 - t) * src[j] + t * src[j + 1]
        })
        .collect())
}

/// Normalized azimuthal profile at the image's native radial length.
pub fn native_profile(img: &GrayImage) -> Result<AiProfile> {
    let square = center_crop_square(img);
    if square.width() < 4 {
        return Err(Error::shape(format!(
            "a radial profile needs at least 4x4 pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let power = spectrum::power_spectrum(&spectrum::fft2(&square));
    spectrum::normalize_ai(&spectrum::azimuthal_integral(&power)?)
}

/// Full pipeline for one decoded raster. The returned vector has an empty id and no label.
pub fn extract_feature(raster: &Raster, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let gray = raster_to_gray(raster);
    let profile = native_profile(&gray)?;
    let values = resample_profile(&profile, cfg.target_len)?.into_values();
    Ok(FeatureVector::new(String::new(), None, values))
}

/// Mean of the top quarter of bins (at least one bin).
pub fn top_quartile_mean(values: &[f64]) -> f64 {
    let n = values.len();
    let start = n - (n / 4).max(1);
    values[start..].iter().sum::<f64>() / (n - start) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(w: usize, h: usize, px: [f64; 3]) -> RgbImage {
        RgbImage::new(w, h, vec![px; w * h]).unwrap()
    }

    #[test]
    fn grayscale_weights() {
        let white = to_grayscale(&rgb(3, 2, [255.0; 3]));
        assert!(white.data().iter().all(|&v| (v - 255.0).abs() < 1e-9));
        let red = to_grayscale(&rgb(2, 2, [100.0, 0.0, 0.0]));
        assert!(red.data().iter().all(|&v| (v - 29.9).abs() < 1e-12));
        let g = GrayImage::from_fn(3, 3, |x, y| (x + 3 * y) as f64);
        let same = to_grayscale(&RgbImage::from_channels(&g, &g, &g).unwrap());
        for (a, b) in same.data().iter().zip(g.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(raster_to_gray(&Raster::Gray(g.clone())), g);
    }

    #[test]
    fn crop_rules() {
        let wide = GrayImage::from_fn(6, 4, |x, y| (y * 6 + x) as f64);
        let c = center_crop_square(&wide);
        assert_eq!((c.width(), c.height()), (4, 4));
        assert_eq!(c.get(0, 0), 1.0);

        let odd = GrayImage::from_fn(5, 4, |x, y| (y * 5 + x) as f64);
        let c = center_crop_square(&odd);
        assert_eq!(c, odd.crop(0, 0, 4, 4).unwrap());

        let tall = GrayImage::from_fn(4, 5, |x, y| (y * 4 + x) as f64);
        assert_eq!(center_crop_square(&tall), tall.crop(0, 0, 4, 4).unwrap());

        let sq = GrayImage::filled(4, 4, 2.0);
        assert_eq!(center_crop_square(&sq), sq);
    }

    #[test]
    fn resample_examples() {
        let ai = AiProfile::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(resample_profile(&ai, 3).unwrap().values(), &[1.0, 0.5, 0.0]);

        let ai = AiProfile::new(vec![0.3, 0.1, 0.7, 0.2]).unwrap();
        assert_eq!(resample_profile(&ai, 4).unwrap(), ai);

        let long = resample_profile(&ai, 301).unwrap();
        assert_eq!(long.values()[0], 0.3);
        assert_eq!(long.values()[300], 0.2);
        assert!(resample_profile(&ai, 1).is_err());
    }

    #[test]
    fn constant_image_feature() {
        let f = extract_feature(
            &GrayImage::filled(16, 16, 9.0).into(),
            &FeatureConfig::default(),
        )
        .unwrap();
        assert_eq!(f.len(), DEFAULT_TARGET_LEN);
        assert_eq!(f.values[0], 1.0);
        // native profile is exactly [1, 0, ..., 0] over 8 bins
        let native = native_profile(&GrayImage::filled(16, 16, 9.0)).unwrap();
        assert_eq!(native.len(), 8);
        assert!(native.values()[1..].iter().all(|&v| v.abs() < 1e-12));
        // resampling ramps from bin 0 to bin 1, then stays at zero
        for (i, &v) in f.values.iter().enumerate() {
            let pos = i as f64 * 7.0 / 299.0;
            let expect = (1.0 - pos).max(0.0);
            assert!((v - expect).abs() < 1e-12, "bin {i}: {v} vs {expect}");
        }
    }

    #[test]
    fn zero_image_is_degenerate() {
        let r = extract_feature(
            &GrayImage::filled(8, 8, 0.0).into(),
            &FeatureConfig::default(),
        );
        assert!(matches!(r, Err(Error::DegenerateSpectrum(_))));
    }

    #[test]
    fn quartile_mean() {
        assert_eq!(
            top_quartile_mean(&[0.0, 0.0, 0.0, 0.0, 1.0, 3.0, 5.0, 7.0]),
            6.0
        );
        assert_eq!(top_quartile_mean(&[1.0, 2.0]), 2.0);
    }
}
