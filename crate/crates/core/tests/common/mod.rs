#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specscope::spectrum::Complex64;
use specscope::GrayImage;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.random_range(0.0..1.0))
}

pub fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Textbook 1D DFT, `X[k] = sum_n x[n] exp(-2 pi i k n / N)`.
pub fn dft1(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let a = -2.0 * std::f64::consts::PI * ((k * j) % n) as f64 / n as f64;
                    Complex64::from_polar(v, a)
                })
                .sum()
        })
        .collect()
}

/// Textbook 2D DFT indexed `[k * width + l]` with `k` along x and `l` along y,
/// written independently of the library.
pub fn dft2_oracle(img: &GrayImage) -> Vec<Complex64> {
    let (w, h) = (img.width(), img.height());
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for l in 0..h {
        for k in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let phase = -2.0
                        * std::f64::consts::PI
                        * (((k * x) % w) as f64 / w as f64 + ((l * y) % h) as f64 / h as f64);
                    acc += Complex64::from_polar(img.get(x, y), phase);
                }
            }
            out[l * w + k] = acc;
        }
    }
    out
}

pub fn frobenius(v: impl Iterator<Item = Complex64>) -> f64 {
    v.map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
