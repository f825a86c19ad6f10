//! Deterministic synthetic corpus: power-law "real" images and up-convolved fakes.
//!
//! A real image is the inverse DFT of a random-phase spectrum whose magnitude
//! falls off as `|w|^(-exponent/2)`, stretched to `[0, 255]`. A fake is made by
//! dropping every other row and column of an independently generated real
//! image and restoring the size with one of two up-convolution units:
//!
//! * `TransConv`: zero insertion followed by a 3x3 convolution,
//! * `UpConv`: bilinear interpolation followed by the same convolution.
//!
//! The convolution is a uniform 3x3 average. Its response does not vanish at
//! the replica frequencies, so zero-inserted fakes keep visible high-frequency
//! replicas while interpolated fakes lose high frequencies.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::classify::Label;
use crate::ingest::{self, pnm, SampleRecord};
use crate::resample::{self, InterpMode, Kernel2D, Padding};
use crate::spectrum::{self, ComplexSpectrum};
use crate::{Error, GrayImage, Result};

/// Fake-source images draw from this stream offset so they never coincide with real images.
const FAKE_SOURCE_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FakeMode {
    TransConv,
    UpConv,
}

impl fmt::Display for FakeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FakeMode::TransConv => "transconv",
            FakeMode::UpConv => "upconv",
        })
    }
}

impl FromStr for FakeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transconv" => Ok(FakeMode::TransConv),
            "upconv" => Ok(FakeMode::UpConv),
            other => Err(Error::usage(format!(
                "unknown fake mode {other:?} (expected transconv or upconv)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_real: usize,
    pub n_fake: usize,
    /// Side length in pixels; even and at least 16.
    pub size: usize,
    /// Power falls off as `|w|^(-spectral_exponent)`.
    pub spectral_exponent: f64,
    pub fake_mode: FakeMode,
    pub seed: u64,
    /// When non-zero, consecutive images of each class share a group id in
    /// blocks of this many, emulating frames of one video.
    pub group_size: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_real: 200,
            n_fake: 200,
            size: 64,
            spectral_exponent: 2.0,
            fake_mode: FakeMode::TransConv,
            seed: 42,
            group_size: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < 16 || !self.size.is_multiple_of(2) {
            return Err(Error::usage(format!(
                "synthetic size must be even and >= 16, got {}",
                self.size
            )));
        }
        if self.n_real == 0 || self.n_fake == 0 {
            return Err(Error::usage("need at least one real and one fake image"));
        }
        if !self.spectral_exponent.is_finite() {
            return Err(Error::usage("spectral exponent must be finite"));
        }
        Ok(())
    }
}

/// Complex inverse DFT of the random-phase spectrum for `(seed, index)`, before
/// the imaginary part is dropped. Its imaginary part is zero up to rounding.
pub fn real_field(cfg: &SynthConfig, index: u64) -> ComplexSpectrum {
    let n = cfg.size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let phases: Vec<f64> = (0..n * n)
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();

    let signed = |k: usize| -> f64 {
        if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        }
    };
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        for l in 0..n {
            if k == 0 && l == 0 {
                continue;
            }
            let (mk, ml) = ((n - k) % n, (n - l) % n);
            let idx = k * n + l;
            let mirror = mk * n + ml;
            let radius = signed(k).hypot(signed(l));
            let amp = radius.powf(-cfg.spectral_exponent / 2.0);
            if idx == mirror {
                // self-conjugate bin: must be real
                data[idx] = Complex64::new(amp * phases[idx].cos().signum(), 0.0);
            } else if idx < mirror {
                let c = Complex64::from_polar(amp, phases[idx]);
                data[idx] = c;
                data[mirror] = c.conj();
            }
        }
    }
    let spec = ComplexSpectrum::new(n, n, data).expect("square spectrum");
    spectrum::ifft2(&spec)
}

/// Real image `index` of the corpus, stretched to `[0, 255]`.
pub fn gen_real(cfg: &SynthConfig, index: u64) -> GrayImage {
    let field = real_field(cfg, index);
    let n = cfg.size;
    GrayImage::new(n, n, field.data().iter().map(|c| c.re).collect())
        .expect("finite field")
        .stretched_to_u8_range()
}

/// The fixed convolution applied after up-sampling.
pub fn fake_kernel() -> Kernel2D {
    Kernel2D::box3()
}

/// Halves the resolution, then restores it with the up-convolution unit `mode`.
pub fn gen_fake(real: &GrayImage, mode: FakeMode) -> Result<GrayImage> {
    if !real.width().is_multiple_of(2) || !real.height().is_multiple_of(2) {
        return Err(Error::shape(format!(
            "fake generation needs even dimensions, got {}x{}",
            real.width(),
            real.height()
        )));
    }
    let low = resample::decimate_2x(real)?;
    let up = match mode {
        FakeMode::TransConv => resample::zero_insert_2d(&low),
        FakeMode::UpConv => resample::interp_upsample_2d(&low, InterpMode::Bilinear),
    };
    resample::conv2d(&up, &fake_kernel(), Padding::Replicate)
}

/// Source image of fake `index`.
pub fn fake_source(cfg: &SynthConfig, index: u64) -> GrayImage {
    gen_real(cfg, FAKE_SOURCE_STREAM + index)
}

fn group_of(cfg: &SynthConfig, class: &str, i: usize) -> Option<String> {
    (cfg.group_size > 0).then(|| format!("{class}_g{:04}", i / cfg.group_size))
}

/// In-memory corpus: `(record, image)` pairs with reals first. Record paths are
/// the relative paths [`build_corpus`] would use.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<(SampleRecord, GrayImage)>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.n_real + cfg.n_fake);
    for i in 0..cfg.n_real {
        let id = format!("real_{i:05}");
        out.push((
            SampleRecord {
                path: Path::new("real").join(format!("{id}.pgm")),
                id,
                label: Some(Label::Real),
                group: group_of(cfg, "real", i),
            },
            gen_real(cfg, i as u64),
        ));
    }
    for i in 0..cfg.n_fake {
        let id = format!("fake_{i:05}");
        let img = gen_fake(&fake_source(cfg, i as u64), cfg.fake_mode)?.stretched_to_u8_range();
        out.push((
            SampleRecord {
                path: Path::new("fake").join(format!("{id}.pgm")),
                id,
                label: Some(Label::Fake),
                group: group_of(cfg, "fake", i),
            },
            img,
        ));
    }
    Ok(out)
}

/// Writes `real/*.pgm`, `fake/*.pgm` and `manifest.csv` under `out_dir`.
/// Returns the manifest records (paths relative to `out_dir`).
pub fn build_corpus(cfg: &SynthConfig, out_dir: &Path) -> Result<Vec<SampleRecord>> {
    let corpus = generate(cfg)?;
    for sub in ["real", "fake"] {
        let dir = out_dir.join(sub);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let mut records = Vec::with_capacity(corpus.len());
    for (record, img) in corpus {
        let path = out_dir.join(&record.path);
        ingest::write_atomic(&path, &pnm::encode_pgm(&img))?;
        records.push(record);
    }
    ingest::write_manifest(&records, &out_dir.join(ingest::MANIFEST_NAME))?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_real: 3,
            n_fake: 3,
            size: 16,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn real_images_are_deterministic_and_distinct() {
        let cfg = small();
        assert_eq!(gen_real(&cfg, 1), gen_real(&cfg, 1));
        assert_ne!(gen_real(&cfg, 1), gen_real(&cfg, 2));
        let img = gen_real(&cfg, 0);
        let (lo, hi) = img.min_max();
        assert_eq!(lo, 0.0);
        assert!((hi - 255.0).abs() < 1e-9);
    }

    #[test]
    fn field_is_real() {
        for size in [16, 18, 32] {
            let cfg = SynthConfig { size, ..small() };
            let field = real_field(&cfg, 3);
            let max_im = field.data().iter().map(|c| c.im.abs()).fold(0.0, f64::max);
            assert!(max_im < 1e-9, "size {size}: {max_im}");
        }
    }

    #[test]
    fn upconv_fake_of_constant_is_constant() {
        let flat = GrayImage::filled(16, 16, 77.0);
        let up = gen_fake(&flat, FakeMode::UpConv).unwrap();
        assert!(up.data().iter().all(|&v| (v - 77.0).abs() < 1e-12));
    }

    #[test]
    fn transconv_fake_of_constant_is_a_checkerboard() {
        let flat = GrayImage::filled(16, 16, 9.0);
        let t = gen_fake(&flat, FakeMode::TransConv).unwrap();
        // interior phases of zero insertion under a 3x3 average: 1, 2 or 4 live taps
        assert!((t.get(4, 4) - 1.0).abs() < 1e-12);
        assert!((t.get(5, 4) - 2.0).abs() < 1e-12);
        assert!((t.get(5, 5) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn odd_images_rejected() {
        assert!(gen_fake(&GrayImage::filled(15, 16, 1.0), FakeMode::UpConv).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig {
            size: 15,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SynthConfig { size: 8, ..small() }.validate().is_err());
        assert!(SynthConfig {
            n_fake: 0,
            ..small()
        }
        .validate()
        .is_err());
        assert_eq!("upconv".parse::<FakeMode>().unwrap(), FakeMode::UpConv);
        assert!("nearest".parse::<FakeMode>().is_err());
    }

    #[test]
    fn groups_come_in_blocks() {
        let cfg = SynthConfig {
            n_real: 5,
            n_fake: 2,
            group_size: 2,
            ..small()
        };
        let corpus = generate(&cfg).unwrap();
        let groups: Vec<_> = corpus
            .iter()
            .map(|(r, _)| r.group.clone().unwrap())
            .collect();
        assert_eq!(
            groups,
            [
                "real_g0000",
                "real_g0000",
                "real_g0001",
                "real_g0001",
                "real_g0002",
                "fake_g0000",
                "fake_g0000"
            ]
        );
    }
}
