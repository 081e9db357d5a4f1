//! Wiener inverse-filter estimation of a blur transfer function from a
//! (sharp estimate, blurred) pair: `H = Y X* / (|X|^2 + S)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::spectral::{fft2_plane, Spectrum, TransferFunction};

/// Regularization used for every estimate unless overridden.
pub const DEFAULT_REGULARIZATION: f64 = 1e-8;
/// A bin counts as excited when `|X|^2 >= EXCITATION_FACTOR * S`.
pub const EXCITATION_FACTOR: f64 = 1e4;
/// Raw DC estimates within this relative distance of 1 are snapped to 1.
pub const DC_SNAP_WINDOW: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerConfig {
    regularization: f64,
    pub dc_renormalize: bool,
}

impl WienerConfig {
    pub fn new(regularization: f64, dc_renormalize: bool) -> Result<Self> {
        if !(regularization.is_finite() && regularization > 0.0) {
            return Err(Error::invalid(format!(
                "wiener regularization must be positive and finite, got {regularization}"
            )));
        }
        Ok(Self {
            regularization,
            dc_renormalize,
        })
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }
}

impl Default for WienerConfig {
    fn default() -> Self {
        Self {
            regularization: DEFAULT_REGULARIZATION,
            dc_renormalize: true,
        }
    }
}

/// An estimated transfer function and its diagnostics.
#[derive(Debug, Clone)]
pub struct WienerEstimate {
    pub transfer: TransferFunction,
    /// Per bin, whether `|X|^2` reached the excitation threshold.
    pub excited: Vec<bool>,
    /// Set when the raw DC estimate was too far from 1 to be snapped.
    pub dc_flagged: bool,
}

impl WienerEstimate {
    pub fn excited_fraction(&self) -> f64 {
        self.excited.iter().filter(|&&e| e).count() as f64 / self.excited.len() as f64
    }

    pub fn is_excited(&self, row: usize, col: usize) -> bool {
        self.excited[row * self.transfer.width() + col]
    }
}

/// Snaps the DC bin to exactly 1 when it lies within [`DC_SNAP_WINDOW`] of 1.
/// Returns `false` (leaving the bin alone) otherwise.
pub fn renormalize_dc(tf: &mut TransferFunction) -> bool {
    let one = Complex64::new(1.0, 0.0);
    if (tf.dc() - one).norm() <= DC_SNAP_WINDOW {
        tf.values_mut()[0] = one;
        true
    } else {
        false
    }
}

/// Bin-wise `Y X* / (|X|^2 + S)`.
pub fn wiener_estimate(x: &Spectrum, y: &Spectrum, cfg: &WienerConfig) -> Result<WienerEstimate> {
    y.ensure_dims(x.height(), x.width())?;
    let s = cfg.regularization;
    let threshold = EXCITATION_FACTOR * s;
    let mut excited = Vec::with_capacity(x.values().len());
    let values = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(xv, yv)| {
            let power = xv.norm_sqr();
            excited.push(power >= threshold);
            yv * xv.conj() / (power + s)
        })
        .collect();
    let mut transfer = Spectrum::new(x.height(), x.width(), values)?;
    let dc_flagged = cfg.dc_renormalize && !renormalize_dc(&mut transfer);
    Ok(WienerEstimate {
        transfer,
        excited,
        dc_flagged,
    })
}

/// Estimates one transfer function shared by all channels, from the
/// luminance planes of the two images.
pub fn estimate_from_images(
    x_sharp: &Image,
    y_blurred: &Image,
    cfg: &WienerConfig,
) -> Result<WienerEstimate> {
    x_sharp.ensure_same_shape(y_blurred)?;
    let x = fft2_plane(&x_sharp.luminance())?;
    let y = fft2_plane(&y_blurred.luminance())?;
    wiener_estimate(&x, &y, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::{degrade, DegradationStrength};
    use crate::image::Image;
    use crate::spectral::kernel_to_transfer;
    use crate::synth::{
        in_dead_band, make_gaussian_kernel, make_test_image, GaussianSpec, TestImageKind,
    };

    fn gaussian_tf(sigma: f64, n: usize) -> TransferFunction {
        kernel_to_transfer(
            &make_gaussian_kernel(&GaussianSpec::with_sigma(sigma).unwrap()),
            n,
            n,
        )
        .unwrap()
    }

    #[test]
    fn config_rejects_bad_regularization() {
        assert!(WienerConfig::new(0.0, true).is_err());
        assert!(WienerConfig::new(f64::INFINITY, true).is_err());
        assert!(WienerConfig::new(-1e-8, true).is_err());
        assert_eq!(WienerConfig::default().regularization(), 1e-8);
    }

    #[test]
    fn zero_input_gives_zero_estimate() {
        let x = Spectrum::zeros(16, 16);
        let y = Spectrum::ones(16, 16);
        let cfg = WienerConfig::new(1e-8, false).unwrap();
        let est = wiener_estimate(&x, &y, &cfg).unwrap();
        assert!(est.transfer.values().iter().all(|v| v.norm() == 0.0));
        assert_eq!(est.excited_fraction(), 0.0);
        // With renormalization on, a DC of 0 is too far from 1 to snap.
        let est = wiener_estimate(&x, &y, &WienerConfig::default()).unwrap();
        assert!(est.dc_flagged);
        assert_eq!(est.transfer.dc().norm(), 0.0);
    }

    #[test]
    fn mismatched_dims() {
        let cfg = WienerConfig::default();
        assert!(wiener_estimate(&Spectrum::ones(8, 8), &Spectrum::ones(8, 16), &cfg).is_err());
        let a = Image::filled(8, 8, 1, 0.5).unwrap();
        let b = Image::filled(8, 16, 1, 0.5).unwrap();
        assert!(estimate_from_images(&a, &b, &cfg).is_err());
    }

    #[test]
    fn identity_pair_recovers_unit_transfer() {
        let x = make_test_image(TestImageKind::Broadband, 64, 64, 5).unwrap();
        let est = estimate_from_images(&x, &x, &WienerConfig::default()).unwrap();
        for (i, v) in est.transfer.values().iter().enumerate() {
            if est.excited[i] {
                assert!((v - 1.0).norm() < 1e-3);
            }
        }
        assert!(est.excited_fraction() > 0.99);
    }

    #[test]
    fn recovers_gaussian_from_degraded_pair() {
        let x = make_test_image(TestImageKind::Broadband, 128, 128, 11).unwrap();
        let h = gaussian_tf(2.0, 128);
        let y = degrade(&x, &h, DegradationStrength::BLURRED).unwrap();
        let est = estimate_from_images(&x, &y, &WienerConfig::default()).unwrap();
        let (mut ok, mut total) = (0usize, 0usize);
        for (i, (e, t)) in est.transfer.values().iter().zip(h.values()).enumerate() {
            if est.excited[i] {
                total += 1;
                if (e - t).norm() <= 1e-3 * t.norm() {
                    ok += 1;
                }
            }
        }
        assert!(total > 0);
        assert!(ok as f64 >= 0.95 * total as f64, "{ok}/{total}");
    }

    #[test]
    fn dead_band_is_unexcited_and_bounded() {
        let x = make_test_image(TestImageKind::BandLimited, 64, 64, 3).unwrap();
        let h = gaussian_tf(2.0, 64);
        let y = degrade(&x, &h, DegradationStrength::BLURRED).unwrap();
        let cfg = WienerConfig::default();
        let xs = fft2_plane(&x.plane(0)).unwrap();
        let ys = fft2_plane(&y.plane(0)).unwrap();
        let est = wiener_estimate(&xs, &ys, &cfg).unwrap();
        let mut bound = 0.0f64;
        for r in 0..64 {
            for c in 0..64 {
                if in_dead_band(r, c, 64, 64) {
                    bound = bound.max((ys.get(r, c) * xs.get(r, c).conj()).norm());
                }
            }
        }
        bound /= cfg.regularization();
        for r in 0..64 {
            for c in 0..64 {
                if in_dead_band(r, c, 64, 64) {
                    assert!(!est.is_excited(r, c));
                    assert!(est.transfer.get(r, c).norm() <= bound);
                }
            }
        }
    }

    #[test]
    fn renormalization_is_idempotent() {
        let mut tf = Spectrum::ones(8, 8);
        tf.set(0, 0, Complex64::new(1.05, 0.0));
        assert!(renormalize_dc(&mut tf));
        let once = tf.clone();
        assert!(renormalize_dc(&mut tf));
        assert_eq!(once, tf);
        tf.set(0, 0, Complex64::new(1.5, 0.0));
        assert!(!renormalize_dc(&mut tf));
        assert_eq!(tf.dc(), Complex64::new(1.5, 0.0));
    }
}
