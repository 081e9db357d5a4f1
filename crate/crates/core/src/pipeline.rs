//! Iterative restoration and training-sample generation.
//!
//! Inference walks the trajectory backwards. Starting from `x_n = y`, each
//! step asks the restorer for a sharp estimate `x0_hat`, re-estimates the
//! blur between `x0_hat` and the original `y` with the Wiener filter, and
//! re-blurs `x0_hat` to strength `(t-1)/n` to produce the next input.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::degradation::{
    degrade, degrade_unclamped, validate_kernel, DegradationStrength, KernelValidityReport,
};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::restorers::Restorer;
use crate::spectral::{fft2_plane, Spectrum, TransferFunction};
use crate::synth::DEFAULT_KERNEL_SIZE;
use crate::wiener::{wiener_estimate, WienerConfig};

/// Largest tolerated drift of an intermediate's mean away from the input's.
pub const MAX_MEAN_DRIFT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceConfig {
    n: usize,
    pub wiener: WienerConfig,
    pub record_intermediates: bool,
    pub validate_each_step: bool,
    /// Support window used when validating per-step kernel estimates.
    pub validation_support: usize,
}

impl InferenceConfig {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("inference needs at least one step"));
        }
        Ok(Self {
            n,
            ..Self::default()
        })
    }

    pub fn steps(&self) -> usize {
        self.n
    }
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            n: 5,
            wiener: WienerConfig::default(),
            record_intermediates: false,
            validate_each_step: false,
            validation_support: DEFAULT_KERNEL_SIZE,
        }
    }
}

/// What happened at one step `t` (counting down from `n`).
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: usize,
    pub beta: f64,
    /// Restorer input.
    pub x_t: Image,
    pub x0_hat: Image,
    /// Luminance spectra of `x_t` and `x0_hat`.
    pub x_t_spectrum: Spectrum,
    pub x0_hat_spectrum: Spectrum,
    pub kernel_estimate: TransferFunction,
    pub dc_flagged: bool,
    pub validity: Option<KernelValidityReport>,
}

#[derive(Debug, Clone)]
pub struct InferenceOutcome {
    /// Final sharp estimate, clamped to `[0, 1]`.
    pub output: Image,
    /// Strengths handed to the restorer, in call order.
    pub schedule: Vec<f64>,
    /// Per-step records, populated when intermediates or validation were requested.
    pub steps: Vec<StepRecord>,
}

fn guard(img: &Image, target_mean: f64, step: usize, what: &str) -> Result<()> {
    let drift = (img.mean() - target_mean).abs();
    if drift > MAX_MEAN_DRIFT {
        return Err(Error::Divergence {
            step,
            reason: format!("{what} mean drifted by {drift:.4}"),
        });
    }
    Ok(())
}

fn at_step(step: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::AtStep {
        step,
        source: Box::new(e),
    }
}

/// Runs the iterative restoration loop on a blurred image.
pub fn infer(
    y: &Image,
    restorer: &dyn Restorer,
    cfg: &InferenceConfig,
) -> Result<InferenceOutcome> {
    let n = cfg.n;
    let y_spectrum = fft2_plane(&y.luminance())?;
    let y_mean = y.mean();
    let keep_steps = cfg.record_intermediates || cfg.validate_each_step;

    let mut x_t = y.clone();
    let mut schedule = Vec::with_capacity(n);
    let mut steps = Vec::new();
    let mut last = None;
    for t in (1..=n).rev() {
        let strength = DegradationStrength::at_step(t, n)?;
        schedule.push(strength.beta());
        let x0_hat = restorer.restore(&x_t, strength).map_err(at_step(t))?;
        y.ensure_same_shape(&x0_hat).map_err(at_step(t))?;
        guard(&x0_hat, y_mean, t, "restorer output")?;

        let x0_spectrum = fft2_plane(&x0_hat.luminance())?;
        let estimate = wiener_estimate(&x0_spectrum, &y_spectrum, &cfg.wiener)?;
        let next_strength = DegradationStrength::at_step(t - 1, n)?;
        let x_prev =
            degrade_unclamped(&x0_hat, &estimate.transfer, next_strength).map_err(|e| {
                Error::Divergence {
                    step: t,
                    reason: e.to_string(),
                }
            })?;
        guard(&x_prev, y_mean, t, "re-degraded intermediate")?;

        if keep_steps {
            let validity = if cfg.validate_each_step {
                Some(validate_kernel(&estimate.transfer, cfg.validation_support)?)
            } else {
                None
            };
            steps.push(StepRecord {
                t,
                beta: strength.beta(),
                x_t_spectrum: fft2_plane(&x_t.luminance())?,
                x_t: x_t.clone(),
                x0_hat_spectrum: x0_spectrum,
                x0_hat: x0_hat.clone(),
                kernel_estimate: estimate.transfer,
                dc_flagged: estimate.dc_flagged,
                validity,
            });
        }
        x_t = x_prev;
        last = Some(x0_hat);
    }
    let output = last.expect("n >= 1").clamped();
    Ok(InferenceOutcome {
        output,
        schedule,
        steps,
    })
}

/// How `beta` is drawn for training samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaLaw {
    /// Uniform on `(0, 1]`.
    HalfOpen,
    /// Uniform on `(0, 1)`.
    Open,
    /// Always the given value.
    Fixed(f64),
}

impl std::str::FromStr for BetaLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half_open" | "half-open" => Ok(Self::HalfOpen),
            "open" => Ok(Self::Open),
            other => other
                .strip_prefix("fixed:")
                .and_then(|v| v.parse().ok())
                .map(Self::Fixed)
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "beta law must be half_open, open or fixed:<beta>, got `{other}`"
                    ))
                }),
        }
    }
}

impl BetaLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            // random::<f64>() is uniform on [0, 1).
            BetaLaw::HalfOpen => 1.0 - rng.random::<f64>(),
            BetaLaw::Open => loop {
                let u = rng.random::<f64>();
                if u > 0.0 {
                    break u;
                }
            },
            BetaLaw::Fixed(beta) => beta,
        }
    }
}

/// One training example: a partially blurred image, its strength and the
/// sharp target.
#[derive(Debug, Clone)]
pub struct TrainingTriple {
    pub x_beta: Image,
    pub beta: f64,
    pub x0: Image,
    /// Blur the triple was generated with.
    pub transfer: Arc<TransferFunction>,
}

/// `count` triples with independent strengths, reproducible from `seed`.
pub fn gen_training_samples(
    x0: &Image,
    h: &TransferFunction,
    count: usize,
    law: BetaLaw,
    seed: u64,
) -> Result<Vec<TrainingTriple>> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if let BetaLaw::Fixed(beta) = law {
        DegradationStrength::new(beta)?;
    }
    h.ensure_dims(x0.height(), x0.width())?;
    let transfer = Arc::new(h.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let beta = law.sample(&mut rng);
            Ok(TrainingTriple {
                x_beta: degrade(x0, h, DegradationStrength::new(beta)?)?,
                beta,
                x0: x0.clone(),
                transfer: Arc::clone(&transfer),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::psnr;
    use crate::restorers::{identity_restorer, oracle_restorer, wiener_deconv_restorer};
    use crate::spectral::kernel_to_transfer;
    use crate::synth::{make_gaussian_kernel, make_test_image, GaussianSpec, TestImageKind};
    use std::sync::Mutex;

    fn setup(sigma: f64, n: usize) -> (Image, TransferFunction, Image) {
        let x0 = make_test_image(TestImageKind::Broadband, n, n, 77).unwrap();
        let h = kernel_to_transfer(
            &make_gaussian_kernel(&GaussianSpec::with_sigma(sigma).unwrap()),
            n,
            n,
        )
        .unwrap();
        let y = degrade(&x0, &h, DegradationStrength::BLURRED).unwrap();
        (x0, h, y)
    }

    /// Records the strengths it is called with, returns a fixed image.
    struct Spy {
        out: Image,
        seen: Mutex<Vec<f64>>,
    }

    impl Restorer for Spy {
        fn name(&self) -> &str {
            "spy"
        }
        fn restore(&self, _x: &Image, s: DegradationStrength) -> Result<Image> {
            self.seen.lock().unwrap().push(s.beta());
            Ok(self.out.clone())
        }
    }

    struct Failing;
    impl Restorer for Failing {
        fn name(&self) -> &str {
            "failing"
        }
        fn restore(&self, x: &Image, s: DegradationStrength) -> Result<Image> {
            if s.beta() < 0.7 {
                return Err(Error::Restorer {
                    name: "failing".into(),
                    message: "boom".into(),
                });
            }
            Ok(x.clone())
        }
    }

    struct Brightener;
    impl Restorer for Brightener {
        fn name(&self) -> &str {
            "brightener"
        }
        fn restore(&self, x: &Image, _s: DegradationStrength) -> Result<Image> {
            x.map(|v| v + 0.5)
        }
    }

    #[test]
    fn config_rejects_zero_steps() {
        assert!(InferenceConfig::new(0).is_err());
        assert_eq!(InferenceConfig::default().steps(), 5);
    }

    #[test]
    fn oracle_is_a_fixed_point() {
        let (x0, _, y) = setup(3.0, 64);
        let r = oracle_restorer(x0.clone());
        for n in [1, 3, 5] {
            let out = infer(&y, &r, &InferenceConfig::new(n).unwrap()).unwrap();
            assert_eq!(out.output, x0);
        }
    }

    #[test]
    fn oracle_intermediates_follow_the_trajectory() {
        let (x0, _, y) = setup(3.0, 64);
        let cfg = InferenceConfig {
            record_intermediates: true,
            ..InferenceConfig::new(4).unwrap()
        };
        let out = infer(&y, &oracle_restorer(x0.clone()), &cfg).unwrap();
        assert_eq!(out.steps.len(), 4);
        // Step t feeds degrade(x0, H~, (t-1)/n) into step t-1.
        for pair in out.steps.windows(2) {
            let (cur, next) = (&pair[0], &pair[1]);
            let expected = degrade_unclamped(
                &x0,
                &cur.kernel_estimate,
                DegradationStrength::at_step(cur.t - 1, 4).unwrap(),
            )
            .unwrap();
            let d = next
                .x_t
                .data()
                .iter()
                .zip(expected.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(d < 1e-12);
        }
        // High-frequency energy shrinks as t grows.
        let energies: Vec<f64> = out
            .steps
            .iter()
            .map(|s| s.x_t_spectrum.high_frequency_energy())
            .collect();
        for w in energies.windows(2) {
            assert!(w[0] <= w[1] * (1.0 + 1e-9) || w[0] < w[1], "{energies:?}");
        }
    }

    #[test]
    fn schedule_counts_down() {
        let (x0, _, y) = setup(2.0, 32);
        let spy = Spy {
            out: x0,
            seen: Mutex::new(Vec::new()),
        };
        let out = infer(&y, &spy, &InferenceConfig::new(4).unwrap()).unwrap();
        let expected = vec![1.0, 0.75, 0.5, 0.25];
        assert_eq!(out.schedule, expected);
        assert_eq!(*spy.seen.lock().unwrap(), expected);
    }

    #[test]
    fn single_step_returns_restorer_output() {
        let (x0, h, y) = setup(2.0, 32);
        let r = wiener_deconv_restorer(h, 1e-2).unwrap();
        let direct = r.restore(&y, DegradationStrength::BLURRED).unwrap();
        let out = infer(&y, &r, &InferenceConfig::new(1).unwrap()).unwrap();
        assert_eq!(out.output, direct);
        assert!(psnr(&out.output, &x0).unwrap() > psnr(&y, &x0).unwrap());
    }

    #[test]
    fn identity_restorer_leaves_psnr_unchanged() {
        let (x0, _, y) = setup(3.0, 64);
        let out = infer(&y, &identity_restorer(), &InferenceConfig::new(5).unwrap()).unwrap();
        let a = psnr(&out.output, &x0).unwrap();
        let b = psnr(&y, &x0).unwrap();
        assert!((a - b).abs() < 0.1, "{a} vs {b}");
    }

    #[test]
    fn restorer_error_carries_step() {
        let (_, _, y) = setup(2.0, 32);
        let err = infer(&y, &Failing, &InferenceConfig::new(5).unwrap()).unwrap_err();
        match err {
            Error::AtStep { step, source } => {
                assert_eq!(step, 3);
                assert!(matches!(*source, Error::Restorer { .. }));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mean_drift_is_divergence() {
        let (_, _, y) = setup(2.0, 32);
        let err = infer(&y, &Brightener, &InferenceConfig::new(2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Divergence { step: 2, .. }));
    }

    #[test]
    fn validation_reports_per_step() {
        let (x0, _, y) = setup(2.0, 64);
        let cfg = InferenceConfig {
            validate_each_step: true,
            ..InferenceConfig::new(3).unwrap()
        };
        let out = infer(&y, &oracle_restorer(x0), &cfg).unwrap();
        assert_eq!(out.steps.len(), 3);
        assert!(out.steps.iter().all(|s| s.validity.is_some()));
    }

    #[test]
    fn training_samples() {
        let (x0, h, y) = setup(2.0, 32);
        let fixed = gen_training_samples(&x0, &h, 2, BetaLaw::Fixed(1.0), 0).unwrap();
        assert!(fixed.iter().all(|t| t.x_beta == y && t.beta == 1.0));

        let near = gen_training_samples(&x0, &h, 1, BetaLaw::Fixed(1e-3), 0).unwrap();
        let mad = near[0]
            .x_beta
            .data()
            .iter()
            .zip(x0.data())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / x0.data().len() as f64;
        assert!(mad < 1e-2, "{mad}");

        let a = gen_training_samples(&x0, &h, 6, BetaLaw::HalfOpen, 9).unwrap();
        let b = gen_training_samples(&x0, &h, 6, BetaLaw::HalfOpen, 9).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.beta, q.beta);
            assert_eq!(p.x_beta, q.x_beta);
            assert!(p.beta > 0.0 && p.beta <= 1.0);
        }
        assert!(gen_training_samples(&x0, &h, 0, BetaLaw::Open, 0).is_err());
        assert!(gen_training_samples(&x0, &h, 1, BetaLaw::Fixed(1.5), 0).is_err());
    }

    #[test]
    fn beta_laws_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let h = BetaLaw::HalfOpen.sample(&mut rng);
            assert!(h > 0.0 && h <= 1.0);
            let o = BetaLaw::Open.sample(&mut rng);
            assert!(o > 0.0 && o < 1.0);
        }
        assert_eq!("fixed:0.5".parse::<BetaLaw>().unwrap(), BetaLaw::Fixed(0.5));
        assert!("uniform".parse::<BetaLaw>().is_err());
    }
}
