//! Full-reference image quality metrics.
//!
//! SSIM uses the common configuration: an 11x11 Gaussian window with
//! sigma 1.5, stabilizers `C1 = (0.01 L)^2`, `C2 = (0.03 L)^2`, evaluated at
//! every position where the window fits entirely inside the image.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::Image;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Mean squared error over every sample of every channel.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// PSNR in dB for a peak value of 1.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    psnr_with_peak(a, b, 1.0)
}

pub fn psnr_with_peak(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    let err = mse(a, b)?;
    if err == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (peak * peak / err).log10()).min(PSNR_CAP_DB))
}

fn ssim_window() -> [f64; SSIM_WINDOW] {
    let r = (SSIM_WINDOW / 2) as f64;
    let mut w = [0.0; SSIM_WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// Separable "valid" filtering: output is `(h - 10) x (w - 10)`.
fn filter_valid(src: &[f64], h: usize, w: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h - SSIM_WINDOW + 1, w - SSIM_WINDOW + 1);
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        let line = &src[r * w..(r + 1) * w];
        for c in 0..ow {
            rows[r * ow + c] = win
                .iter()
                .zip(&line[c..c + SSIM_WINDOW])
                .map(|(k, v)| k * v)
                .sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = win
                .iter()
                .enumerate()
                .map(|(k, wk)| wk * rows[(r + k) * ow + c])
                .sum();
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize, peak: f64) -> f64 {
    let win = ssim_window();
    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let prod =
        |f: fn(f64, f64) -> f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect() };
    let mu_a = filter_valid(a, h, w, &win);
    let mu_b = filter_valid(b, h, w, &win);
    let aa = filter_valid(&prod(|x, _| x * x), h, w, &win);
    let bb = filter_valid(&prod(|_, y| y * y), h, w, &win);
    let ab = filter_valid(&prod(|x, y| x * y), h, w, &win);
    let n = mu_a.len();
    let mut acc = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = aa[i] - ma * ma;
        let var_b = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
    acc / n as f64
}

/// Mean SSIM with peak 1, averaged over channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    ssim_with_peak(a, b, 1.0)
}

pub fn ssim_with_peak(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    a.ensure_same_shape(b)?;
    if a.height() < SSIM_WINDOW || a.width() < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "ssim needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {}x{}",
            a.height(),
            a.width()
        )));
    }
    let total: f64 = (0..a.channels())
        .map(|c| ssim_plane(a.channel(c), b.channel(c), a.height(), a.width(), peak))
        .sum();
    Ok(total / a.channels() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub mse: f64,
}

pub fn evaluate(a: &Image, b: &Image) -> Result<MetricReport> {
    Ok(MetricReport {
        psnr_db: psnr(a, b)?,
        ssim: ssim(a, b)?,
        mse: mse(a, b)?,
    })
}

impl fmt::Display for MetricReport {
    /// One `key=value` per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "psnr={:.4}", self.psnr_db)?;
        writeln!(f, "ssim={:.4}", self.ssim)?;
        write!(f, "mse={:.6e}", self.mse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{make_test_image, TestImageKind};

    /// Windowed statistics computed directly at each position, no separability.
    fn ssim_brute(a: &Image, b: &Image) -> f64 {
        let win = ssim_window();
        let (h, w) = (a.height(), a.width());
        let (c1, c2) = (1e-4, 9e-4);
        let mut acc = 0.0;
        let mut count = 0;
        for r in 0..=h - SSIM_WINDOW {
            for c in 0..=w - SSIM_WINDOW {
                let (mut ma, mut mb) = (0.0, 0.0);
                for i in 0..SSIM_WINDOW {
                    for j in 0..SSIM_WINDOW {
                        let k = win[i] * win[j];
                        ma += k * a.get(0, r + i, c + j);
                        mb += k * b.get(0, r + i, c + j);
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for i in 0..SSIM_WINDOW {
                    for j in 0..SSIM_WINDOW {
                        let k = win[i] * win[j];
                        let da = a.get(0, r + i, c + j) - ma;
                        let db = b.get(0, r + i, c + j) - mb;
                        va += k * da * da;
                        vb += k * db * db;
                        cov += k * da * db;
                    }
                }
                acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        acc / count as f64
    }

    #[test]
    fn mse_basics() {
        let zeros = Image::filled(16, 16, 1, 0.0).unwrap();
        let ones = Image::filled(16, 16, 1, 1.0).unwrap();
        assert_eq!(mse(&zeros, &zeros).unwrap(), 0.0);
        assert_eq!(mse(&zeros, &ones).unwrap(), 1.0);
        let x = make_test_image(TestImageKind::Broadband, 16, 16, 1).unwrap();
        let shifted = x.map(|v| v + 0.1).unwrap();
        assert!((mse(&x, &shifted).unwrap() - 0.01).abs() < 1e-15);
        let small = Image::filled(8, 8, 1, 0.0).unwrap();
        assert!(mse(&zeros, &small).is_err());
    }

    #[test]
    fn psnr_closed_forms() {
        let x = make_test_image(TestImageKind::Broadband, 16, 16, 1).unwrap();
        assert_eq!(psnr(&x, &x).unwrap(), PSNR_CAP_DB);
        let shifted = x.map(|v| v + 0.1).unwrap();
        assert!((psnr(&x, &shifted).unwrap() - 20.0).abs() < 1e-9);
        assert!((psnr_with_peak(&x, &shifted, 2.0).unwrap() - 26.020599913279625).abs() < 1e-9);
    }

    #[test]
    fn ssim_identity_and_size_check() {
        let x = make_test_image(TestImageKind::Broadband, 32, 32, 4).unwrap();
        assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let tiny = Image::filled(10, 10, 1, 0.5).unwrap();
        assert!(ssim(&tiny, &tiny).is_err());
    }

    #[test]
    fn ssim_matches_brute_force() {
        let a = make_test_image(TestImageKind::Broadband, 24, 28, 4).unwrap();
        let b = make_test_image(TestImageKind::Broadband, 24, 28, 5).unwrap();
        let fast = ssim(&a, &b).unwrap();
        let slow = ssim_brute(&a, &b);
        assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
    }

    #[test]
    fn inverted_checkerboard_is_anticorrelated() {
        let x = make_test_image(TestImageKind::Checkerboard, 32, 32, 0).unwrap();
        let inv = x.map(|v| 1.0 - v).unwrap();
        let s = ssim(&x, &inv).unwrap();
        let oracle = ssim_brute(&x, &inv);
        assert!(s < 0.0, "{s}");
        assert!((s - oracle).abs() < 1e-10);
    }

    #[test]
    fn report_format() {
        let x = make_test_image(TestImageKind::Broadband, 16, 16, 1).unwrap();
        let text = evaluate(&x, &x).unwrap().to_string();
        assert!(text.starts_with("psnr=100.0000\nssim=1.0000\n"), "{text}");
    }
}
