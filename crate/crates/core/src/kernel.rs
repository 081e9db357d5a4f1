//! Small spatial blur kernels (point spread functions).

use crate::error::{Error, Result};

/// Tolerance on negative taps left by numerical residue.
pub const NEGATIVE_TAP_TOLERANCE: f64 = 1e-6;
/// Tolerance on the sum of taps.
pub const SUM_TOLERANCE: f64 = 1e-6;

/// Square, odd-sized, non-negative kernel whose taps sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel size must be odd, got {size}"
            )));
        }
        if taps.len() != size * size {
            return Err(Error::mismatch(
                format!("{} taps", size * size),
                format!("{} taps", taps.len()),
            ));
        }
        if let Some(pos) = taps.iter().position(|t| !t.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite kernel tap at index {pos}"
            )));
        }
        let min = taps.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_TAP_TOLERANCE {
            return Err(Error::invalid(format!("kernel has negative tap {min:e}")));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "kernel taps sum to {sum}, expected 1"
            )));
        }
        Ok(Self { size, taps })
    }

    /// Rescales arbitrary non-negative weights to unit sum.
    pub fn normalized(size: usize, mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::invalid(format!("kernel weights sum to {sum}")));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(size, weights)
    }

    /// Identity kernel: a single unit tap in the center.
    pub fn delta(size: usize) -> Result<Self> {
        let mut taps = vec![0.0; size * size];
        if size % 2 == 1 {
            taps[size * size / 2] = 1.0;
        }
        Self::new(size, taps)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.taps[row * self.size + col]
    }

    /// Per-axis variance of the taps about the center, averaged over both axes.
    pub fn variance(&self) -> f64 {
        let r = self.radius() as f64;
        let mut acc = 0.0;
        for i in 0..self.size {
            for j in 0..self.size {
                let (di, dj) = (i as f64 - r, j as f64 - r);
                acc += self.get(i, j) * (di * di + dj * dj);
            }
        }
        acc / 2.0
    }
}
