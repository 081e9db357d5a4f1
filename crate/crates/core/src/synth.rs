//! Gaussian degradation kernels and deterministic synthetic test imagery.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{Image, Plane};
use crate::kernel::Kernel;
use crate::spectral::{fft2_plane, ifft2, Spectrum};

/// Kernel side length used for the training degradations.
pub const DEFAULT_KERNEL_SIZE: usize = 15;
/// Range the blur standard deviation is drawn from.
pub const SIGMA_RANGE: (f64, f64) = (2.0, 4.0);

/// Parameters of an isotropic Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub size: usize,
    pub sigma: f64,
}

impl GaussianSpec {
    pub fn new(size: usize, sigma: f64) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel size must be odd, got {size}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { size, sigma })
    }

    /// 15x15 kernel with the given sigma.
    pub fn with_sigma(sigma: f64) -> Result<Self> {
        Self::new(DEFAULT_KERNEL_SIZE, sigma)
    }

    /// Kernel wide enough (radius `ceil(7.5 sigma)`) that its truncation
    /// ripple stays below the fractional-power magnitude floor.
    ///
    /// A 15x15 window cuts a sigma >= 2 Gaussian early enough that its
    /// transfer function goes negative at high frequencies, and fractional
    /// powers of those bins are no longer real kernels.
    pub fn untruncated(sigma: f64) -> Result<Self> {
        let radius = (7.5 * sigma).ceil() as usize;
        Self::new(2 * radius + 1, sigma)
    }

    /// 15x15 kernel with sigma drawn uniformly from [`SIGMA_RANGE`].
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let sigma = rng.random_range(SIGMA_RANGE.0..=SIGMA_RANGE.1);
        Self {
            size: DEFAULT_KERNEL_SIZE,
            sigma,
        }
    }
}

impl Default for GaussianSpec {
    fn default() -> Self {
        Self {
            size: DEFAULT_KERNEL_SIZE,
            sigma: 2.0,
        }
    }
}

/// Taps proportional to `exp(-(i^2 + j^2) / (2 sigma^2))` on the centered
/// integer grid, normalized after truncation to sum to one.
pub fn make_gaussian_kernel(spec: &GaussianSpec) -> Kernel {
    let r = (spec.size / 2) as f64;
    let two_var = 2.0 * spec.sigma * spec.sigma;
    let mut taps = Vec::with_capacity(spec.size * spec.size);
    for i in 0..spec.size {
        for j in 0..spec.size {
            let (di, dj) = (i as f64 - r, j as f64 - r);
            taps.push((-(di * di + dj * dj) / two_var).exp());
        }
    }
    Kernel::normalized(spec.size, taps).expect("gaussian weights are positive")
}

/// Kinds of synthetic images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestImageKind {
    /// Smoothed uniform noise mixed with white noise; every frequency is excited.
    Broadband,
    /// Binary 0/1 squares of [`CHECKER_CELL`] pixels.
    Checkerboard,
    /// A single 1 at `(0, 0)`.
    Impulse,
    /// Every sample 0.5.
    Constant,
    /// Broadband with the [`DEAD_BAND`] annulus removed from its spectrum.
    BandLimited,
}

impl std::str::FromStr for TestImageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "broadband" => Self::Broadband,
            "checkerboard" => Self::Checkerboard,
            "impulse" => Self::Impulse,
            "constant" => Self::Constant,
            "band_limited" | "band-limited" => Self::BandLimited,
            other => return Err(Error::invalid(format!("unknown test image kind `{other}`"))),
        })
    }
}

pub const CHECKER_CELL: usize = 4;

/// Normalized radial frequency band (fraction of Nyquist) zeroed in
/// [`TestImageKind::BandLimited`].
pub const DEAD_BAND: (f64, f64) = (0.25, 0.35);

/// Whether bin `(row, col)` of an `height x width` grid lies in [`DEAD_BAND`].
pub fn in_dead_band(row: usize, col: usize, height: usize, width: usize) -> bool {
    let fy = Spectrum::signed_frequency(row, height) as f64 / (height as f64 / 2.0);
    let fx = Spectrum::signed_frequency(col, width) as f64 / (width as f64 / 2.0);
    let rho = (fx * fx + fy * fy).sqrt();
    rho >= DEAD_BAND.0 && rho <= DEAD_BAND.1
}

fn uniform_plane(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Vec<f64> {
    (0..h * w).map(|_| rng.random::<f64>()).collect()
}

fn box_blur_circular(src: &[f64], h: usize, w: usize, radius: isize) -> Vec<f64> {
    let norm = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for dr in -radius..=radius {
                let rr = (r as isize + dr).rem_euclid(h as isize) as usize;
                for dc in -radius..=radius {
                    let cc = (c as isize + dc).rem_euclid(w as isize) as usize;
                    acc += src[rr * w + cc];
                }
            }
            out[r * w + c] = acc / norm;
        }
    }
    out
}

fn stretch_unit(v: &mut [f64]) {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let span = hi - lo;
    if span > 0.0 {
        v.iter_mut().for_each(|x| *x = (*x - lo) / span);
    }
}

fn broadband(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Vec<f64> {
    let mut low = box_blur_circular(&uniform_plane(rng, h, w), h, w, 2);
    stretch_unit(&mut low);
    let white = uniform_plane(rng, h, w);
    low.iter()
        .zip(&white)
        .map(|(l, n)| 0.7 * l + 0.3 * n)
        .collect()
}

/// Deterministic single-channel test image.
pub fn make_test_image(
    kind: TestImageKind,
    height: usize,
    width: usize,
    seed: u64,
) -> Result<Image> {
    if height < 16 || width < 16 {
        return Err(Error::invalid(format!(
            "test images must be at least 16x16, got {height}x{width}"
        )));
    }
    let n = height * width;
    let data = match kind {
        TestImageKind::Constant => vec![0.5; n],
        TestImageKind::Impulse => {
            let mut d = vec![0.0; n];
            d[0] = 1.0;
            d
        }
        TestImageKind::Checkerboard => (0..n)
            .map(|i| {
                let (r, c) = (i / width, i % width);
                ((r / CHECKER_CELL + c / CHECKER_CELL) % 2) as f64
            })
            .collect(),
        TestImageKind::Broadband => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            broadband(&mut rng, height, width)
        }
        TestImageKind::BandLimited => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = Plane::new(height, width, broadband(&mut rng, height, width))?;
            let mut spec = fft2_plane(&base)?;
            for r in 0..height {
                for c in 0..width {
                    if in_dead_band(r, c, height, width) {
                        spec.set(r, c, num_complex::Complex64::new(0.0, 0.0));
                    }
                }
            }
            // Affine rescale only touches the DC bin, so the band stays empty.
            let mut d = ifft2(&spec).plane.into_data();
            stretch_unit(&mut d);
            d
        }
    };
    Image::new(height, width, 1, data)
}

/// Three-channel broadband image with independent channel content.
pub fn make_color_test_image(height: usize, width: usize, seed: u64) -> Result<Image> {
    let planes = (0..3)
        .map(|c| {
            let img = make_test_image(
                TestImageKind::Broadband,
                height,
                width,
                seed.wrapping_add(c),
            )?;
            Ok(img.plane(0))
        })
        .collect::<Result<Vec<_>>>()?;
    Image::from_planes(planes)
}
