//! The forward process: fractional powers of a transfer function and the
//! degradation operator that places an image anywhere between sharp and
//! fully blurred.
//!
//! A blur `H` is split into `n` equal factors `H^(1/n)`; after `t` of them the
//! image spectrum is `X0 * H^(t/n)`. The exponent `beta = t/n` is allowed to be
//! any real number in `[0, 1]`, giving a continuous trajectory.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::{Image, Plane};
use crate::spectral::{extract_window, fft2_plane, ifft2, Spectrum, TransferFunction};

/// Bins with magnitude below this are treated as exact zeros.
pub const MAGNITUDE_FLOOR: f64 = 1e-12;
/// A DC bin this close to one is snapped to exactly one.
pub const DC_UNIT_TOLERANCE: f64 = 1e-6;

/// Position along the blur trajectory, `beta` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationStrength {
    beta: f64,
    step: Option<(usize, usize)>,
}

impl DegradationStrength {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::invalid(format!(
                "beta must lie in [0, 1], got {beta}"
            )));
        }
        Ok(Self { beta, step: None })
    }

    /// `beta = t / n`.
    pub fn at_step(t: usize, n: usize) -> Result<Self> {
        if n == 0 || t > n {
            return Err(Error::invalid(format!(
                "step {t} of {n} is outside the trajectory"
            )));
        }
        Ok(Self {
            beta: t as f64 / n as f64,
            step: Some((t, n)),
        })
    }

    pub const SHARP: Self = Self {
        beta: 0.0,
        step: None,
    };
    pub const BLURRED: Self = Self {
        beta: 1.0,
        step: None,
    };

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `(t, n)` when constructed from a step index.
    pub fn step(&self) -> Option<(usize, usize)> {
        self.step
    }
}

impl TryFrom<f64> for DegradationStrength {
    type Error = Error;

    fn try_from(beta: f64) -> Result<Self> {
        Self::new(beta)
    }
}

/// Principal argument mapped into `(-pi, pi]`.
#[inline]
fn principal_phase(z: Complex64) -> f64 {
    let phi = z.arg();
    if phi <= -PI {
        PI
    } else {
        phi
    }
}

/// `|H|^beta * exp(j * phi * beta)` per bin.
///
/// Bins under [`MAGNITUDE_FLOOR`] become 0 (or 1 when `beta = 0`). The DC bin
/// is snapped to exactly 1 when the input DC is within [`DC_UNIT_TOLERANCE`]
/// of 1.
///
/// For kernels whose transfer has negative real bins (phase `pi`), the result
/// is not Hermitian and its spatial counterpart is complex. That is reported
/// by [`validate_kernel`], not corrected here.
pub fn fractional_power(h: &TransferFunction, strength: DegradationStrength) -> TransferFunction {
    let beta = strength.beta();
    let one = Complex64::new(1.0, 0.0);
    let mut out = h.clone();
    if beta == 0.0 {
        out.values_mut().iter_mut().for_each(|v| *v = one);
        return out;
    }
    for v in out.values_mut() {
        let mag = v.norm();
        *v = if mag < MAGNITUDE_FLOOR {
            Complex64::new(0.0, 0.0)
        } else if beta == 1.0 {
            *v
        } else {
            Complex64::from_polar(mag.powf(beta), principal_phase(*v) * beta)
        };
    }
    if (h.dc() - one).norm() <= DC_UNIT_TOLERANCE {
        out.values_mut()[0] = one;
    }
    out
}

fn check_dims(x: &Image, h: &TransferFunction) -> Result<()> {
    h.ensure_dims(x.height(), x.width())
}

/// Applies an already-powered transfer to every channel without clamping.
pub(crate) fn apply_transfer(x: &Image, h: &TransferFunction) -> Result<Image> {
    check_dims(x, h)?;
    let planes = x
        .planes()
        .iter()
        .map(|p| {
            let spec = fft2_plane(p)?.multiply(h)?;
            Ok(ifft2(&spec).plane)
        })
        .collect::<Result<Vec<Plane>>>()?;
    Image::from_planes(planes)
}

/// The degradation operator without the final clamp.
///
/// All chained computations (trajectory algebra, inference) go through this.
pub fn degrade_unclamped(
    x0: &Image,
    h: &TransferFunction,
    strength: DegradationStrength,
) -> Result<Image> {
    check_dims(x0, h)?;
    if strength.beta() == 0.0 {
        return Ok(x0.clone());
    }
    apply_transfer(x0, &fractional_power(h, strength))
}

/// `F^-1{ F{x0} * H^beta }`, real part, clamped to `[0, 1]`.
pub fn degrade(x0: &Image, h: &TransferFunction, strength: DegradationStrength) -> Result<Image> {
    Ok(degrade_unclamped(x0, h, strength)?.clamped())
}

/// `[degrade(x0, H, t/n) for t in 0..=n]`.
pub fn trajectory(x0: &Image, h: &TransferFunction, n: usize) -> Result<Vec<Image>> {
    if n == 0 {
        return Err(Error::invalid("trajectory needs at least one step"));
    }
    check_dims(x0, h)?;
    (0..=n)
        .map(|t| degrade(x0, h, DegradationStrength::at_step(t, n)?))
        .collect()
}

/// Tolerances for [`validate_kernel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityTolerances {
    pub max_negative_tap: f64,
    pub imag_residue: f64,
    pub dc_gain_error: f64,
    pub tail_mass: f64,
}

impl Default for ValidityTolerances {
    fn default() -> Self {
        Self {
            max_negative_tap: 1e-4,
            imag_residue: 1e-6,
            dc_gain_error: 1e-4,
            tail_mass: 1e-3,
        }
    }
}

/// How close a transfer function is to a physical blur kernel: real,
/// non-negative, unit sum and concentrated in a small window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValidityReport {
    /// Magnitude of the most negative spatial tap (0 if none).
    pub max_negative_tap: f64,
    /// Largest imaginary sample of the spatial counterpart.
    pub imag_residue: f64,
    /// `|H(0,0) - 1|`.
    pub dc_gain_error: f64,
    /// Fraction of squared spatial energy outside the support window.
    pub tail_mass: f64,
    pub is_valid: bool,
}

impl std::fmt::Display for KernelValidityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "max_negative_tap={:.6e}", self.max_negative_tap)?;
        writeln!(f, "imag_residue={:.6e}", self.imag_residue)?;
        writeln!(f, "dc_gain_error={:.6e}", self.dc_gain_error)?;
        writeln!(f, "tail_mass={:.6e}", self.tail_mass)?;
        write!(f, "valid={}", self.is_valid)
    }
}

/// [`validate_kernel_with`] using the default tolerances.
pub fn validate_kernel(tf: &TransferFunction, support: usize) -> Result<KernelValidityReport> {
    validate_kernel_with(tf, support, &ValidityTolerances::default())
}

pub fn validate_kernel_with(
    tf: &TransferFunction,
    support: usize,
    tol: &ValidityTolerances,
) -> Result<KernelValidityReport> {
    let inv = ifft2(tf);
    let (_, tail_mass) = extract_window(&inv.plane, support)?;
    let min_tap = inv
        .plane
        .data()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let max_negative_tap = (-min_tap).max(0.0);
    let dc_gain_error = (tf.dc() - Complex64::new(1.0, 0.0)).norm();
    let is_valid = max_negative_tap <= tol.max_negative_tap
        && inv.imag_residue <= tol.imag_residue
        && dc_gain_error <= tol.dc_gain_error
        && tail_mass <= tol.tail_mass;
    Ok(KernelValidityReport {
        max_negative_tap,
        imag_residue: inv.imag_residue,
        dc_gain_error,
        tail_mass,
        is_valid,
    })
}

/// Standard deviation of the spatial counterpart of `tf`, from its second
/// moment about `(0, 0)` with periodic coordinates, averaged over both axes.
pub fn effective_sigma(tf: &TransferFunction) -> f64 {
    let plane = ifft2(tf).plane;
    let (h, w) = (plane.height(), plane.width());
    let (mut mass, mut moment) = (0.0, 0.0);
    for r in 0..h {
        let dy = Spectrum::signed_frequency(r, h) as f64;
        for c in 0..w {
            let dx = Spectrum::signed_frequency(c, w) as f64;
            let v = plane.get(r, c);
            mass += v;
            moment += v * (dx * dx + dy * dy);
        }
    }
    (moment / (2.0 * mass)).sqrt()
}
