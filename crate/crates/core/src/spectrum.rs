//! Discrete Fourier analysis of rasters and the azimuthal integral of the
//! power spectrum.
//!
//! Coefficient `(k, l)` of a spectrum pairs row frequency `k` (along the
//! image height `M`) with column frequency `l` (along the width `N`):
//!
//! ```text
//! F(k, l) = sum_m sum_n I(m, n) exp(-2 pi i (k m / M + l n / N))
//! ```
//!
//! The power spectrum is returned DC-centred, with the zero frequency moved to
//! `(floor(M/2), floor(N/2))`. Radial bins are the rounded Euclidean distance
//! from that centre, and the azimuthal integral sums the power in every bin.

use std::f64::consts::PI;

pub use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::{Error, GrayImage, Result};

/// Complex DFT coefficients, row-major, DC at index `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != width * height || width == 0 || height == 0 {
            return Err(Error::shape(format!(
                "{width}x{height} spectrum with {} coefficients",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Coefficient at row frequency `k`, column frequency `l`.
    #[inline]
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.data[k * self.width + l]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }
}

/// Reference DFT evaluated as the literal double sum. O(M^2 N^2).
pub fn dft2(img: &GrayImage) -> ComplexSpectrum {
    let (w, h) = (img.width(), img.height());
    let row_tw = twiddles(h);
    let col_tw = twiddles(w);
    let mut data = Vec::with_capacity(w * h);
    for k in 0..h {
        for l in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..h {
                let rm = row_tw[(k * m) % h];
                for n in 0..w {
                    acc += rm * col_tw[(l * n) % w] * img.get(n, m);
                }
            }
            data.push(acc);
        }
    }
    ComplexSpectrum {
        width: w,
        height: h,
        data,
    }
}

// exp(-2 pi i j / n) for j in 0..n
fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64))
        .collect()
}

/// Fast 2D DFT; any size, including primes.
pub fn fft2(img: &GrayImage) -> ComplexSpectrum {
    let data = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut spec = ComplexSpectrum {
        width: img.width(),
        height: img.height(),
        data,
    };
    transform_in_place(&mut spec, FftDirection::Forward);
    spec
}

/// Unnormalized inverse transform: `sum_k sum_l X(k, l) exp(+2 pi i (k m / M + l n / N))`.
pub fn ifft2_unnormalized(spec: &ComplexSpectrum) -> ComplexSpectrum {
    let mut out = spec.clone();
    transform_in_place(&mut out, FftDirection::Inverse);
    out
}

/// Inverse transform scaled by `1 / (M N)`, so that `ifft2(fft2(x)) == x`.
pub fn ifft2(spec: &ComplexSpectrum) -> ComplexSpectrum {
    let mut out = ifft2_unnormalized(spec);
    let scale = 1.0 / (spec.width * spec.height) as f64;
    out.data.iter_mut().for_each(|c| *c *= scale);
    out
}

fn transform_in_place(spec: &mut ComplexSpectrum, direction: FftDirection) {
    let (w, h) = (spec.width, spec.height);
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft(w, direction);
    row_fft.process(&mut spec.data);

    let col_fft = planner.plan_fft(h, direction);
    let mut column = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for (y, c) in column.iter_mut().enumerate() {
            *c = spec.data[y * w + x];
        }
        col_fft.process(&mut column);
        for (y, c) in column.iter().enumerate() {
            spec.data[y * w + x] = *c;
        }
    }
}

/// Squared DFT magnitudes with DC moved to `(floor(M/2), floor(N/2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl PowerSpectrum {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height || width == 0 || height == 0 {
            return Err(Error::shape(format!(
                "{width}x{height} power matrix with {} entries",
                data.len()
            )));
        }
        if data.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::shape(
                "power entries must be finite and non-negative",
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(column, row)` of the zero frequency.
    pub fn center(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    /// Entry at column `u`, row `v` of the centred matrix.
    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}

pub fn power_spectrum(spec: &ComplexSpectrum) -> PowerSpectrum {
    let (w, h) = (spec.width, spec.height);
    let (cu, cv) = (w / 2, h / 2);
    let mut data = vec![0.0; w * h];
    for k in 0..h {
        let v = (k + cv) % h;
        for l in 0..w {
            let u = (l + cu) % w;
            data[v * w + u] = spec.get(k, l).norm_sqr();
        }
    }
    PowerSpectrum {
        width: w,
        height: h,
        data,
    }
}

/// Radial bin of an offset from the spectrum centre: the rounded distance.
#[inline]
pub fn radial_bin(du: isize, dv: isize) -> usize {
    ((du * du + dv * dv) as f64).sqrt().round() as usize
}

/// Radial bin of unshifted coefficient `(k, l)` in an `height x width` spectrum.
#[inline]
pub fn coefficient_bin(k: usize, l: usize, width: usize, height: usize) -> usize {
    let v = ((k + height / 2) % height) as isize - (height / 2) as isize;
    let u = ((l + width / 2) % width) as isize - (width / 2) as isize;
    radial_bin(u, v)
}

/// How power is accumulated within a radial bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Accumulation {
    /// Sum of the bin's entries (the ring integral).
    #[default]
    Sum,
    /// Average over the bin's entries; empty bins are 0.
    Mean,
}

/// Azimuthally integrated power per radial frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct AiProfile {
    values: Vec<f64>,
    normalized: bool,
}

impl AiProfile {
    /// Raw (unnormalized) profile. Values must be finite and non-negative.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::checked(values, false)
    }

    fn checked(values: Vec<f64>, normalized: bool) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::shape("empty profile"));
        }
        if values.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::shape(
                "profile values must be finite and non-negative",
            ));
        }
        Ok(Self { values, normalized })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub(crate) fn with_values(values: Vec<f64>, normalized: bool) -> Self {
        Self { values, normalized }
    }
}

/// Sum of power per radial bin, `floor(min(M, N) / 2)` bins.
pub fn azimuthal_integral(power: &PowerSpectrum) -> Result<AiProfile> {
    azimuthal_integral_with(power, Accumulation::Sum)
}

pub fn azimuthal_integral_with(power: &PowerSpectrum, acc: Accumulation) -> Result<AiProfile> {
    if power.width != power.height {
        return Err(Error::shape(format!(
            "azimuthal integral needs a square power matrix, got {}x{}",
            power.width, power.height
        )));
    }
    let len = power.width.min(power.height) / 2;
    if len == 0 {
        return Err(Error::shape("power matrix too small for a radial profile"));
    }
    let (cu, cv) = power.center();
    let mut sums = vec![0.0; len];
    let mut counts = vec![0usize; len];
    for v in 0..power.height {
        for u in 0..power.width {
            let bin = radial_bin(u as isize - cu as isize, v as isize - cv as isize);
            if bin < len {
                sums[bin] += power.get(u, v);
                counts[bin] += 1;
            }
        }
    }
    if acc == Accumulation::Mean {
        for (s, &c) in sums.iter_mut().zip(&counts) {
            if c > 0 {
                *s /= c as f64;
            }
        }
    }
    Ok(AiProfile::with_values(sums, false))
}

/// Divides every bin by bin 0.
pub fn normalize_ai(ai: &AiProfile) -> Result<AiProfile> {
    let dc = ai.values[0];
    if !(dc > 0.0) {
        return Err(Error::DegenerateSpectrum(dc));
    }
    if ai.normalized && dc == 1.0 {
        return Ok(ai.clone());
    }
    let mut values: Vec<f64> = ai.values.iter().map(|&v| v / dc).collect();
    values[0] = 1.0;
    Ok(AiProfile::with_values(values, true))
}

/// Per-bin mean and population variance of a set of profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub count: usize,
}

impl ProfileStats {
    pub fn std_dev(&self) -> Vec<f64> {
        self.variance.iter().map(|v| v.sqrt()).collect()
    }
}

pub fn ai_stats<P: AsRef<[f64]>>(profiles: &[P]) -> Result<ProfileStats> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::usage("statistics need at least one profile"))?
        .as_ref();
    let len = first.len();
    if let Some(i) = profiles.iter().position(|p| p.as_ref().len() != len) {
        return Err(Error::usage(format!(
            "profile {i} has length {}, expected {len}",
            profiles[i].as_ref().len()
        )));
    }
    let n = profiles.len() as f64;
    let mut mean = vec![0.0; len];
    for p in profiles {
        for (m, &v) in mean.iter_mut().zip(p.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut variance = vec![0.0; len];
    for p in profiles {
        for ((s, &v), &m) in variance.iter_mut().zip(p.as_ref()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    variance.iter_mut().for_each(|s| *s /= n);
    Ok(ProfileStats {
        mean,
        variance,
        count: profiles.len(),
    })
}

impl AsRef<[f64]> for AiProfile {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn constant_image_is_dc_only() {
        let c = 3.5;
        let img = GrayImage::filled(4, 4, c);
        for spec in [dft2(&img), fft2(&img)] {
            assert!(close(spec.get(0, 0), Complex64::new(16.0 * c, 0.0), 1e-12));
            for (i, z) in spec.data().iter().enumerate().skip(1) {
                assert!(z.norm() < 1e-12, "coefficient {i} = {z}");
            }
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let img = GrayImage::from_fn(4, 4, |x, y| if x == 0 && y == 0 { 1.0 } else { 0.0 });
        let spec = dft2(&img);
        assert!(spec
            .data()
            .iter()
            .all(|z| close(*z, Complex64::new(1.0, 0.0), 1e-12)));
        let power = power_spectrum(&spec);
        assert!(power.data().iter().all(|&p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn power_of_constant_sits_at_center() {
        let c = 2.0;
        let power = power_spectrum(&fft2(&GrayImage::filled(4, 4, c)));
        assert_eq!(power.center(), (2, 2));
        for v in 0..4 {
            for u in 0..4 {
                let want = if (u, v) == (2, 2) {
                    (16.0 * c) * (16.0 * c)
                } else {
                    0.0
                };
                assert!((power.get(u, v) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn odd_sizes_center_at_floor_half() {
        let img = GrayImage::filled(5, 7, 1.0);
        let power = power_spectrum(&fft2(&img));
        assert_eq!(power.center(), (2, 3));
        assert!((power.get(2, 3) - 35.0 * 35.0).abs() < 1e-9);
    }

    #[test]
    fn azimuthal_integral_of_constant() {
        let c = 0.25;
        let ai = azimuthal_integral(&power_spectrum(&fft2(&GrayImage::filled(8, 8, c)))).unwrap();
        assert_eq!(ai.len(), 4);
        assert!((ai.values()[0] - (64.0 * c) * (64.0 * c)).abs() < 1e-9);
        assert!(ai.values()[1..].iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn azimuthal_integral_rejects_non_square() {
        let power = power_spectrum(&fft2(&GrayImage::filled(6, 4, 1.0)));
        assert!(matches!(azimuthal_integral(&power), Err(Error::Shape(_))));
    }

    #[test]
    fn mean_accumulation_divides_by_bin_population() {
        let impulse = GrayImage::from_fn(8, 8, |x, y| if x + y == 0 { 1.0 } else { 0.0 });
        let power = power_spectrum(&fft2(&impulse));
        let ai = azimuthal_integral_with(&power, Accumulation::Mean).unwrap();
        assert!(ai.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn normalize_examples() {
        let ai = AiProfile::new(vec![4.0, 2.0, 1.0]).unwrap();
        let n = normalize_ai(&ai).unwrap();
        assert_eq!(n.values(), &[1.0, 0.5, 0.25]);
        assert!(n.is_normalized());
        assert_eq!(normalize_ai(&n).unwrap(), n);

        let zero_dc = AiProfile::new(vec![0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            normalize_ai(&zero_dc),
            Err(Error::DegenerateSpectrum(_))
        ));
    }

    #[test]
    fn stats_examples() {
        let s = ai_stats(&[vec![3.0, 1.0]]).unwrap();
        assert_eq!(s.mean, vec![3.0, 1.0]);
        assert_eq!(s.variance, vec![0.0, 0.0]);

        let s = ai_stats(&[vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(s.mean, vec![1.0, 1.0]);
        assert_eq!(s.variance, vec![1.0, 1.0]);
        assert_eq!(s.count, 2);

        assert!(ai_stats::<Vec<f64>>(&[]).is_err());
        assert!(ai_stats(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn coefficient_bin_matches_shifted_layout() {
        for (w, h) in [(8, 8), (5, 5), (6, 6)] {
            let img = GrayImage::from_fn(w, h, |x, y| ((x * 7 + y * 3) % 5) as f64);
            let spec = fft2(&img);
            let power = power_spectrum(&spec);
            let (cu, cv) = power.center();
            for k in 0..h {
                for l in 0..w {
                    let u = (l + w / 2) % w;
                    let v = (k + h / 2) % h;
                    assert_eq!(
                        coefficient_bin(k, l, w, h),
                        radial_bin(u as isize - cu as isize, v as isize - cv as isize)
                    );
                }
            }
        }
    }
}
