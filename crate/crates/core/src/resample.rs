//! Factor-2 up-sampling operators and 2D convolution.
//!
//! Two families of up-sampling units are modelled: zero insertion ("bed of
//! nails", the first half of a stride-2 transposed convolution) and
//! interpolation (nearest or linear) that is followed by a convolution.
//!
//! Output layout interleaves every source sample with the value for the gap
//! that follows it: `out[2j] = a[j]`, `out[2j + 1] = b_j`. Placing the
//! interpolant after the sample rather than before it only changes a linear
//! phase term, never the power spectrum.

use crate::{Error, GrayImage, Result};

/// Real 1D signal with at least two finite samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    data: Vec<f64>,
}

impl Signal1D {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::shape(format!(
                "signal needs at least 2 samples, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::shape("non-finite sample"));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// What lies beyond the last sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// The signal repeats; sample `N` is sample `0`.
    Periodic,
    /// The last sample is repeated.
    #[default]
    Replicate,
}

/// `[a0, a1, ...]` becomes `[a0, 0, a1, 0, ...]`.
pub fn zero_insert_1d(s: &Signal1D) -> Signal1D {
    let mut out = vec![0.0; 2 * s.len()];
    for (j, &a) in s.data.iter().enumerate() {
        out[2 * j] = a;
    }
    Signal1D { data: out }
}

/// Linear interpolation by 2: each gap receives the midpoint of its neighbours.
pub fn linear_upsample_1d(s: &Signal1D, boundary: Boundary) -> Signal1D {
    let n = s.len();
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        let next = match (j + 1 < n, boundary) {
            (true, _) => s.data[j + 1],
            (false, Boundary::Periodic) => s.data[0],
            (false, Boundary::Replicate) => s.data[n - 1],
        };
        out.push(s.data[j]);
        out.push(0.5 * (s.data[j] + next));
    }
    Signal1D { data: out }
}

/// 2D zero insertion: source pixels land on even coordinates, everything else is 0.
pub fn zero_insert_2d(img: &GrayImage) -> GrayImage {
    GrayImage::from_fn(2 * img.width(), 2 * img.height(), |x, y| {
        if x % 2 == 0 && y % 2 == 0 {
            img.get(x / 2, y / 2)
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpMode {
    Nearest,
    Bilinear,
}

/// Doubles both dimensions by interpolation. Bilinear mode applies
/// [`linear_upsample_1d`] along rows then columns with replicated borders.
pub fn interp_upsample_2d(img: &GrayImage, mode: InterpMode) -> GrayImage {
    match mode {
        InterpMode::Nearest => GrayImage::from_fn(2 * img.width(), 2 * img.height(), |x, y| {
            img.get(x / 2, y / 2)
        }),
        InterpMode::Bilinear => {
            let (w, h) = (img.width(), img.height());
            let lerp = |a: f64, b: f64, odd: bool| if odd { 0.5 * (a + b) } else { a };
            let rows = GrayImage::from_fn(2 * w, h, |x, y| {
                let j = x / 2;
                lerp(img.get(j, y), img.get((j + 1).min(w - 1), y), x % 2 == 1)
            });
            GrayImage::from_fn(2 * w, 2 * h, |x, y| {
                let j = y / 2;
                lerp(rows.get(x, j), rows.get(x, (j + 1).min(h - 1)), y % 2 == 1)
            })
        }
    }
}

/// Keeps the pixels at even coordinates, halving both dimensions.
pub fn decimate_2x(img: &GrayImage) -> Result<GrayImage> {
    let (w, h) = (img.width(), img.height());
    if w % 2 != 0 || h % 2 != 0 || w < 4 || h < 4 {
        return Err(Error::shape(format!(
            "2x decimation needs even dimensions of at least 4, got {w}x{h}"
        )));
    }
    Ok(GrayImage::from_fn(w / 2, h / 2, |x, y| {
        img.get(2 * x, 2 * y)
    }))
}

/// Square kernel with odd side length.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::shape(format!("kernel size must be odd, got {size}")));
        }
        if weights.len() != size * size {
            return Err(Error::shape(format!(
                "{size}x{size} kernel needs {} weights, got {}",
                size * size,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::shape("non-finite kernel weight"));
        }
        Ok(Self { size, weights })
    }

    /// Delta kernel: 1 at the centre.
    pub fn identity(size: usize) -> Result<Self> {
        let mut weights = vec![0.0; size * size];
        if let Some(w) = weights.get_mut(size * size / 2) {
            *w = 1.0;
        }
        Self::new(size, weights)
    }

    /// Uniform 3x3 average.
    pub fn box3() -> Self {
        Self {
            size: 3,
            weights: vec![1.0 / 9.0; 9],
        }
    }

    /// `(1,2,1) x (1,2,1) / 16`.
    pub fn binomial3() -> Self {
        let taps = [1.0, 2.0, 1.0];
        let weights = taps
            .iter()
            .flat_map(|a| taps.iter().map(move |b| a * b / 16.0))
            .collect();
        Self { size: 3, weights }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Weight at column `i`, row `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[j * self.size + i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Padding {
    Zero,
    #[default]
    Replicate,
    /// Wrap around; the result is a circular convolution.
    Periodic,
}

/// Same-size cross-correlation:
/// `out(x, y) = sum_{i,j} k(i, j) * img(x + i - r, y + j - r)` with `r = size / 2`.
pub fn conv2d(img: &GrayImage, kernel: &Kernel2D, padding: Padding) -> Result<GrayImage> {
    let (w, h) = (img.width(), img.height());
    if kernel.size > w || kernel.size > h {
        return Err(Error::usage(format!(
            "{0}x{0} kernel is larger than the {w}x{h} image",
            kernel.size
        )));
    }
    let r = (kernel.size / 2) as isize;
    let sample = |x: isize, y: isize| -> f64 {
        let inside = x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h;
        match (inside, padding) {
            (true, _) => img.get(x as usize, y as usize),
            (false, Padding::Zero) => 0.0,
            (false, Padding::Replicate) => img.get(
                x.clamp(0, w as isize - 1) as usize,
                y.clamp(0, h as isize - 1) as usize,
            ),
            (false, Padding::Periodic) => img.get(
                x.rem_euclid(w as isize) as usize,
                y.rem_euclid(h as isize) as usize,
            ),
        }
    };
    Ok(GrayImage::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for j in 0..kernel.size {
            for i in 0..kernel.size {
                acc += kernel.get(i, j)
                    * sample(x as isize + i as isize - r, y as isize + j as isize - r);
            }
        }
        acc
    }))
}
