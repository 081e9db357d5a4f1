//! Frequency grids and 2-D discrete Fourier transforms.
//!
//! Conventions used throughout the crate:
//! - the forward transform is unnormalized, the inverse carries `1/(N*M)`;
//! - convolution is circular;
//! - kernels are embedded with their center tap at index `(0, 0)` and the
//!   remaining taps wrapped periodically, so symmetric kernels are zero-phase.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::image::{Image, Plane};
use crate::kernel::Kernel;

thread_local! {
    // rustfft planners cache plans internally; one per thread keeps them lock-free.
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Complex samples on a `height x width` frequency grid.
///
/// Holds image spectra and transfer functions alike.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    height: usize,
    width: usize,
    values: Vec<Complex64>,
}

/// A transfer function is a spectrum that multiplies image spectra.
pub type TransferFunction = Spectrum;

impl Spectrum {
    pub fn new(height: usize, width: usize, values: Vec<Complex64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "spectrum dimensions must be positive, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(Error::mismatch(
                format!("{} bins", height * width),
                format!("{} bins", values.len()),
            ));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    /// The identity system: every bin equal to one.
    pub fn ones(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![Complex64::new(1.0, 0.0); height * width],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![Complex64::new(0.0, 0.0); height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.values[row * self.width + col] = value;
    }

    /// Zero-frequency bin.
    pub fn dc(&self) -> Complex64 {
        self.values[0]
    }

    pub fn ensure_dims(&self, height: usize, width: usize) -> Result<()> {
        if self.dims() != (height, width) {
            return Err(Error::mismatch(
                format!("{height}x{width}"),
                format!("{}x{}", self.height, self.width),
            ));
        }
        Ok(())
    }

    /// Bin-wise product.
    pub fn multiply(&self, other: &Spectrum) -> Result<Spectrum> {
        other.ensure_dims(self.height, self.width)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Spectrum { values, ..*self })
    }

    /// Largest absolute difference between corresponding bins.
    pub fn max_abs_diff(&self, other: &Spectrum) -> Result<f64> {
        other.ensure_dims(self.height, self.width)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest `|H(w) - conj(H(-w))|`; zero iff the spatial counterpart is real.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.height {
            let mr = (self.height - r) % self.height;
            for c in 0..self.width {
                let mc = (self.width - c) % self.width;
                let d = (self.get(r, c) - self.get(mr, mc).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Signed frequency index of a bin along an axis of length `n`.
    #[inline]
    pub fn signed_frequency(index: usize, n: usize) -> isize {
        if index <= n / 2 {
            index as isize
        } else {
            index as isize - n as isize
        }
    }

    /// Whether a bin lies outside the centered low-frequency half-band,
    /// i.e. `|fy| > height/4` or `|fx| > width/4`.
    #[inline]
    pub fn is_high_frequency(&self, row: usize, col: usize) -> bool {
        let fy = Self::signed_frequency(row, self.height).unsigned_abs();
        let fx = Self::signed_frequency(col, self.width).unsigned_abs();
        4 * fy > self.height || 4 * fx > self.width
    }

    /// Sum of squared magnitudes over the high-frequency band.
    pub fn high_frequency_energy(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.height {
            for c in 0..self.width {
                if self.is_high_frequency(r, c) {
                    acc += self.get(r, c).norm_sqr();
                }
            }
        }
        acc
    }

    /// `log(1 + |X|)` with DC moved to the center, scaled so the largest value
    /// equals `scale_max`. Pass `None` to normalize by this spectrum's own max.
    pub fn log_magnitude_centered(&self, scale_max: Option<f64>) -> Plane {
        let (h, w) = self.dims();
        let mut data = vec![0.0; h * w];
        for r in 0..h {
            for c in 0..w {
                let sr = (r + h / 2) % h;
                let sc = (c + w / 2) % w;
                data[sr * w + sc] = self.get(r, c).norm().ln_1p();
            }
        }
        let max = scale_max.unwrap_or_else(|| data.iter().cloned().fold(0.0, f64::max));
        if max > 0.0 {
            data.iter_mut()
                .for_each(|v| *v = (*v / max).clamp(0.0, 1.0));
        }
        Plane::new(h, w, data).expect("dimensions are positive")
    }

    /// Largest `log(1 + |X|)` over all bins.
    pub fn max_log_magnitude(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm().ln_1p())
            .fold(0.0, f64::max)
    }
}

fn transform_in_place(values: &mut [Complex64], height: usize, width: usize, dir: FftDirection) {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let row_fft = planner.plan_fft(width, dir);
        for row in values.chunks_exact_mut(width) {
            row_fft.process(row);
        }
        let col_fft = planner.plan_fft(height, dir);
        let mut column = vec![Complex64::new(0.0, 0.0); height];
        for c in 0..width {
            for r in 0..height {
                column[r] = values[r * width + c];
            }
            col_fft.process(&mut column);
            for r in 0..height {
                values[r * width + c] = column[r];
            }
        }
    });
}

/// Unnormalized forward DFT of a single plane.
pub fn fft2_plane(plane: &Plane) -> Result<Spectrum> {
    if let Some(pos) = plane.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite sample at index {pos}")));
    }
    let (h, w) = (plane.height(), plane.width());
    let mut values: Vec<Complex64> = plane
        .data()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    transform_in_place(&mut values, h, w, FftDirection::Forward);
    Spectrum::new(h, w, values)
}

/// Forward DFT of every channel. The DC bin equals the sum of samples.
pub fn fft2(img: &Image) -> Result<Vec<Spectrum>> {
    img.planes().iter().map(fft2_plane).collect()
}

/// Real part of an inverse DFT together with the imaginary part that was dropped.
#[derive(Debug, Clone)]
pub struct InverseDft {
    pub plane: Plane,
    /// Largest absolute imaginary sample before it was discarded.
    pub imag_residue: f64,
}

/// Inverse DFT scaled by `1/(N*M)`, keeping the real part.
pub fn ifft2(spectrum: &Spectrum) -> InverseDft {
    let (h, w) = spectrum.dims();
    let mut values = spectrum.values.clone();
    transform_in_place(&mut values, h, w, FftDirection::Inverse);
    let scale = 1.0 / (h * w) as f64;
    let mut imag_residue = 0.0f64;
    let data = values
        .iter()
        .map(|v| {
            imag_residue = imag_residue.max((v.im * scale).abs());
            v.re * scale
        })
        .collect();
    InverseDft {
        plane: Plane::new(h, w, data).expect("dimensions are positive"),
        imag_residue,
    }
}

/// Maps a signed offset onto `0..n` periodically.
#[inline]
pub(crate) fn wrap(offset: isize, n: usize) -> usize {
    offset.rem_euclid(n as isize) as usize
}

/// Embeds `kernel` in a zero grid with its center at `(0, 0)` (periodic wrap).
pub fn embed_kernel(kernel: &Kernel, height: usize, width: usize) -> Result<Plane> {
    let size = kernel.size();
    if size > height.min(width) {
        return Err(Error::invalid(format!(
            "kernel of size {size} does not fit a {height}x{width} grid"
        )));
    }
    let r = kernel.radius() as isize;
    let mut grid = Plane::zeros(height, width);
    let data = grid.data_mut();
    for i in 0..size {
        let gr = wrap(i as isize - r, height);
        for j in 0..size {
            let gc = wrap(j as isize - r, width);
            data[gr * width + gc] += kernel.get(i, j);
        }
    }
    Ok(grid)
}

/// Transfer function of a kernel at the given grid resolution.
pub fn kernel_to_transfer(
    kernel: &Kernel,
    height: usize,
    width: usize,
) -> Result<TransferFunction> {
    fft2_plane(&embed_kernel(kernel, height, width)?)
}

/// Spatial window pulled back out of a transfer function.
#[derive(Debug, Clone)]
pub struct KernelExtraction {
    pub size: usize,
    /// Row-major taps with the center at `(size/2, size/2)`. Not renormalized.
    pub taps: Vec<f64>,
    /// Fraction of squared spatial energy falling outside the window.
    pub discarded_mass: f64,
    /// Largest imaginary sample of the inverse transform.
    pub imag_residue: f64,
}

impl KernelExtraction {
    /// Clips negative residue, renormalizes to unit sum and validates.
    pub fn to_kernel(&self) -> Result<Kernel> {
        let weights = self.taps.iter().map(|t| t.max(0.0)).collect();
        Kernel::normalized(self.size, weights)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.taps[row * self.size + col]
    }
}

/// Extracts the `size x size` window centered at `(0, 0)` of the spatial
/// counterpart of `tf`.
pub fn extract_window(spatial: &Plane, size: usize) -> Result<(Vec<f64>, f64)> {
    let (h, w) = (spatial.height(), spatial.width());
    if size.is_multiple_of(2) || size > h.min(w) {
        return Err(Error::invalid(format!(
            "window size must be odd and at most {}, got {size}",
            h.min(w)
        )));
    }
    let r = (size / 2) as isize;
    let mut taps = Vec::with_capacity(size * size);
    let mut inside = 0.0;
    for i in 0..size {
        let gr = wrap(i as isize - r, h);
        for j in 0..size {
            let v = spatial.get(gr, wrap(j as isize - r, w));
            inside += v * v;
            taps.push(v);
        }
    }
    let total: f64 = spatial.data().iter().map(|v| v * v).sum();
    let discarded = if total > 0.0 {
        ((total - inside) / total).max(0.0)
    } else {
        0.0
    };
    Ok((taps, discarded))
}

/// Inverse of [`kernel_to_transfer`] restricted to an odd window.
pub fn transfer_to_kernel(tf: &TransferFunction, size: usize) -> Result<KernelExtraction> {
    let inv = ifft2(tf);
    let (taps, discarded_mass) = extract_window(&inv.plane, size)?;
    Ok(KernelExtraction {
        size,
        taps,
        discarded_mass,
        imag_residue: inv.imag_residue,
    })
}
