mod common;

use common::{dft1, dft2_oracle, random_image, random_signal, rng};
use proptest::prelude::*;
use rand::Rng;
use specscope::resample::{
    conv2d, decimate_2x, interp_upsample_2d, linear_upsample_1d, zero_insert_1d, zero_insert_2d,
    Boundary, InterpMode, Kernel2D, Padding, Signal1D,
};
use specscope::spectrum::{azimuthal_integral, fft2, power_spectrum, Complex64};
use specscope::GrayImage;

#[test]
fn replica_property_1d() {
    let mut r = rng(10);
    for _ in 0..20 {
        let a = random_signal(&mut r, 32);
        let up = zero_insert_1d(&Signal1D::new(a.clone()).unwrap());
        let (fa, fu) = (dft1(&a), dft1(up.data()));
        for (k, c) in fu.iter().enumerate() {
            assert!((c - fa[k % 32]).norm() < 1e-9);
        }
    }
}

#[test]
fn bilinear_response_is_raised_cosine() {
    let mut r = rng(11);
    let n = 32;
    for _ in 0..20 {
        let s = Signal1D::new(random_signal(&mut r, n)).unwrap();
        let lin = dft1(linear_upsample_1d(&s, Boundary::Periodic).data());
        let zero = dft1(zero_insert_1d(&s).data());
        for k in 0..2 * n {
            // zero-insert followed by circular correlation with (1/2, 1, 1/2): a
            // symmetric kernel, so the response is real
            let h = 1.0 + (std::f64::consts::PI * k as f64 / n as f64).cos();
            assert!((lin[k] - h * zero[k]).norm() < 1e-9, "k={k}");
        }
    }
}

#[test]
fn replica_property_2d() {
    let mut r = rng(12);
    let img = random_image(&mut r, 8, 8);
    let base = dft2_oracle(&img);
    let up = fft2(&zero_insert_2d(&img));
    for k in 0..16 {
        for l in 0..16 {
            assert!((up.get(k, l) - base[(k % 8) * 8 + l % 8]).norm() < 1e-9);
        }
    }
}

/// Raw power in bins strictly above `n / 2`, `n` the side of the source image,
/// and the same band summed on the DC-normalized profile.
fn high_band(img: &GrayImage, n: usize) -> (f64, f64) {
    let ai = azimuthal_integral(&power_spectrum(&fft2(img))).unwrap();
    let v = ai.values();
    let raw: f64 = v[n / 2 + 1..].iter().sum();
    (raw, v[n / 2..].iter().sum::<f64>() / v[0])
}

#[test]
fn bilinear_has_less_high_band_power_than_zero_insert() {
    let mut r = rng(13);
    for _ in 0..20 {
        let img = random_image(&mut r, 8, 8);
        let (bil_raw, bil_norm) = high_band(&interp_upsample_2d(&img, InterpMode::Bilinear), 8);
        let (zer_raw, zer_norm) = high_band(&zero_insert_2d(&img), 8);
        assert!(bil_raw < zer_raw, "{bil_raw} vs {zer_raw}");
        assert!(bil_norm < zer_norm, "{bil_norm} vs {zer_norm}");
    }
}

#[test]
fn nearest_then_decimate_is_identity() {
    let mut r = rng(14);
    let img = random_image(&mut r, 6, 4);
    let up = interp_upsample_2d(&img, InterpMode::Nearest);
    assert_eq!(decimate_2x(&up).unwrap(), img);
}

/// Direct nested-loop cross-correlation with zero padding.
fn conv_oracle(img: &GrayImage, k: &[f64], ks: usize) -> GrayImage {
    let r = (ks / 2) as isize;
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = 0.0;
        for j in 0..ks {
            for i in 0..ks {
                let sx = x as isize + i as isize - r;
                let sy = y as isize + j as isize - r;
                if sx >= 0 && sy >= 0 && (sx as usize) < img.width() && (sy as usize) < img.height()
                {
                    acc += k[j * ks + i] * img.get(sx as usize, sy as usize);
                }
            }
        }
        acc
    })
}

#[test]
fn conv2d_matches_direct_loops() {
    let mut r = rng(15);
    for _ in 0..10 {
        let img = random_image(&mut r, 6, 6);
        let w: Vec<f64> = (0..9).map(|_| r.random_range(-1.0..1.0)).collect();
        let k = Kernel2D::new(3, w.clone()).unwrap();
        let out = conv2d(&img, &k, Padding::Zero).unwrap();
        let oracle = conv_oracle(&img, &w, 3);
        for (a, b) in out.data().iter().zip(oracle.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn conv2d_is_not_convolution() {
    // an off-centre tap exposes the orientation convention
    let mut w = vec![0.0; 9];
    w[5] = 1.0; // row 1, column 2: reads the right neighbour
    let k = Kernel2D::new(3, w).unwrap();
    let img = GrayImage::from_fn(4, 4, |x, y| (x + 10 * y) as f64);
    let out = conv2d(&img, &k, Padding::Zero).unwrap();
    assert_eq!(out.get(1, 1), img.get(2, 1));
    assert_eq!(out.get(3, 1), 0.0);
}

#[test]
fn smoothing_keeps_constants() {
    let flat = GrayImage::filled(8, 8, 3.5);
    for k in [Kernel2D::box3(), Kernel2D::binomial3()] {
        let out = conv2d(&flat, &k, Padding::Replicate).unwrap();
        assert!(out.data().iter().all(|&v| (v - 3.5).abs() < 1e-12));
    }
}

#[test]
fn periodic_padding_is_a_spectral_product() {
    let mut r = rng(18);
    let (w, h) = (8usize, 6usize);
    let img = random_image(&mut r, w, h);
    let taps: Vec<f64> = (0..9).map(|_| r.random_range(-1.0..1.0)).collect();
    let k = Kernel2D::new(3, taps.clone()).unwrap();
    let out = conv2d(&img, &k, Padding::Periodic).unwrap();
    let (fi, fo) = (dft2_oracle(&img), dft2_oracle(&out));
    for l in 0..h {
        for kk in 0..w {
            let mut gain = Complex64::new(0.0, 0.0);
            for j in 0..3 {
                for i in 0..3 {
                    let phase = 2.0
                        * std::f64::consts::PI
                        * (kk as f64 * (i as f64 - 1.0) / w as f64
                            + l as f64 * (j as f64 - 1.0) / h as f64);
                    gain += taps[j * 3 + i] * Complex64::from_polar(1.0, phase);
                }
            }
            let want = fi[l * w + kk] * gain;
            assert!((fo[l * w + kk] - want).norm() < 1e-10);
        }
    }
}

#[test]
fn oversized_kernel_rejected() {
    let k = Kernel2D::identity(5).unwrap();
    assert!(conv2d(&GrayImage::filled(4, 4, 1.0), &k, Padding::Zero).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv2d_is_linear(
        a in prop::collection::vec(-10.0f64..10.0, 25),
        b in prop::collection::vec(-10.0f64..10.0, 25),
        w in prop::collection::vec(-1.0f64..1.0, 9),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
    ) {
        let x = GrayImage::new(5, 5, a).unwrap();
        let y = GrayImage::new(5, 5, b).unwrap();
        let k = Kernel2D::new(3, w).unwrap();
        let mix = GrayImage::from_fn(5, 5, |i, j| alpha * x.get(i, j) + beta * y.get(i, j));
        let lhs = conv2d(&mix, &k, Padding::Zero).unwrap();
        let cx = conv2d(&x, &k, Padding::Zero).unwrap();
        let cy = conv2d(&y, &k, Padding::Zero).unwrap();
        for j in 0..5 {
            for i in 0..5 {
                let rhs = alpha * cx.get(i, j) + beta * cy.get(i, j);
                prop_assert!((lhs.get(i, j) - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_insert_keeps_samples(v in prop::collection::vec(-5.0f64..5.0, 2..40)) {
        let s = Signal1D::new(v.clone()).unwrap();
        let up = zero_insert_1d(&s);
        prop_assert_eq!(up.len(), 2 * v.len());
        for (j, &a) in v.iter().enumerate() {
            prop_assert_eq!(up.data()[2 * j], a);
            prop_assert_eq!(up.data()[2 * j + 1], 0.0);
        }
    }

    #[test]
    fn linear_upsample_midpoints(v in prop::collection::vec(-5.0f64..5.0, 2..40)) {
        let s = Signal1D::new(v.clone()).unwrap();
        let up = linear_upsample_1d(&s, Boundary::Replicate);
        let n = v.len();
        for j in 0..n {
            let next = v[(j + 1).min(n - 1)];
            prop_assert_eq!(up.data()[2 * j], v[j]);
            prop_assert!((up.data()[2 * j + 1] - 0.5 * (v[j] + next)).abs() < 1e-15);
        }
    }
}
