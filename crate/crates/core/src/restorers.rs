//! Inverse-degradation models: anything mapping a partially blurred image and
//! its degradation strength to an estimate of the sharp image.
//!
//! The iterative loop in [`crate::pipeline`] is agnostic to which restorer it
//! drives. The built-in ones make it runnable without a trained network;
//! [`ExternalRestorer`] bridges to a model served by another process.

use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::degradation::{apply_transfer, fractional_power, DegradationStrength};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::tensor::{read_image_tensor, write_image_tensor};
use crate::spectral::TransferFunction;

pub trait Restorer: Send + Sync {
    fn name(&self) -> &str;

    fn description(&self) -> String {
        String::new()
    }

    /// Estimates the sharp image. Output has the same shape as `x`.
    fn restore(&self, x: &Image, strength: DegradationStrength) -> Result<Image>;
}

impl<R: Restorer + ?Sized> Restorer for Box<R> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn description(&self) -> String {
        (**self).description()
    }

    fn restore(&self, x: &Image, strength: DegradationStrength) -> Result<Image> {
        (**self).restore(x, strength)
    }
}

/// Ignores its input and returns a fixed reference image.
#[derive(Debug, Clone)]
pub struct OracleRestorer {
    reference: Image,
}

pub fn oracle_restorer(reference: Image) -> OracleRestorer {
    OracleRestorer { reference }
}

impl Restorer for OracleRestorer {
    fn name(&self) -> &str {
        "oracle"
    }

    fn description(&self) -> String {
        "returns the ground-truth sharp image".into()
    }

    fn restore(&self, x: &Image, _strength: DegradationStrength) -> Result<Image> {
        x.ensure_same_shape(&self.reference)?;
        Ok(self.reference.clone())
    }
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityRestorer;

pub fn identity_restorer() -> IdentityRestorer {
    IdentityRestorer
}

impl Restorer for IdentityRestorer {
    fn name(&self) -> &str {
        "identity"
    }

    fn description(&self) -> String {
        "no-op baseline".into()
    }

    fn restore(&self, x: &Image, _strength: DegradationStrength) -> Result<Image> {
        Ok(x.clone())
    }
}

pub const DEFAULT_SNR_REG: f64 = 1e-2;

/// Classical Wiener deconvolution by the fractional transfer `H^beta`:
/// `X = Y conj(H^beta) / (|H^beta|^2 + snr_reg)`.
///
/// The DC bin is divided exactly so the mean is preserved; at `beta = 0` the
/// input is returned untouched.
#[derive(Debug, Clone)]
pub struct WienerDeconvRestorer {
    transfer: TransferFunction,
    snr_reg: f64,
}

pub fn wiener_deconv_restorer(
    transfer: TransferFunction,
    snr_reg: f64,
) -> Result<WienerDeconvRestorer> {
    if !(snr_reg.is_finite() && snr_reg > 0.0) {
        return Err(Error::invalid(format!(
            "snr_reg must be positive and finite, got {snr_reg}"
        )));
    }
    Ok(WienerDeconvRestorer { transfer, snr_reg })
}

impl WienerDeconvRestorer {
    /// The deconvolution filter applied at a given strength.
    pub fn filter(&self, strength: DegradationStrength) -> TransferFunction {
        let mut g = fractional_power(&self.transfer, strength);
        let dc = g.dc();
        for v in g.values_mut() {
            *v = v.conj() / (v.norm_sqr() + self.snr_reg);
        }
        g.values_mut()[0] = if dc.norm() > 0.0 {
            Complex64::new(1.0, 0.0) / dc
        } else {
            Complex64::new(0.0, 0.0)
        };
        g
    }
}

impl Restorer for WienerDeconvRestorer {
    fn name(&self) -> &str {
        "wiener"
    }

    fn description(&self) -> String {
        format!("wiener deconvolution, snr_reg={}", self.snr_reg)
    }

    fn restore(&self, x: &Image, strength: DegradationStrength) -> Result<Image> {
        self.transfer.ensure_dims(x.height(), x.width())?;
        if strength.beta() == 0.0 {
            return Ok(x.clone());
        }
        Ok(apply_transfer(x, &self.filter(strength))?.clamped())
    }
}

pub const DEFAULT_EXTERNAL_TIMEOUT: Duration = Duration::from_secs(120);

/// Runs `<program> [args..] --input <path> --beta <float> --output <path>`
/// once per call, exchanging images as float tensor files.
///
/// Calls on one handle are serialized.
#[derive(Debug)]
pub struct ExternalRestorer {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    name: String,
    lock: Mutex<()>,
}

pub fn external_restorer(command_spec: &str) -> Result<ExternalRestorer> {
    let mut parts = command_spec.split_whitespace().map(str::to_string);
    let program = parts
        .next()
        .ok_or_else(|| Error::invalid("external restorer command is empty"))?;
    Ok(ExternalRestorer {
        name: format!("external:{command_spec}"),
        program,
        args: parts.collect(),
        timeout: DEFAULT_EXTERNAL_TIMEOUT,
        lock: Mutex::new(()),
    })
}

impl ExternalRestorer {
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Restorer {
            name: self.name.clone(),
            message: message.into(),
        }
    }

    fn run(&self, input: PathBuf, output: PathBuf, log: PathBuf, beta: f64) -> Result<()> {
        let log_file = std::fs::File::create(&log).map_err(|e| self.fail(e.to_string()))?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg("--input")
            .arg(&input)
            .arg("--beta")
            .arg(beta.to_string())
            .arg("--output")
            .arg(&output)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(log_file)
            .spawn()
            .map_err(|e| self.fail(format!("cannot start `{}`: {e}", self.program)))?;
        let started = Instant::now();
        let status = loop {
            match child.try_wait().map_err(|e| self.fail(e.to_string()))? {
                Some(status) => break status,
                None if started.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(self.fail(format!("timed out after {:?}", self.timeout)));
                }
                None => std::thread::sleep(Duration::from_millis(5)),
            }
        };
        if !status.success() {
            let stderr = std::fs::read_to_string(&log).unwrap_or_default();
            let tail: String = stderr.lines().rev().take(5).collect::<Vec<_>>().join(" | ");
            return Err(self.fail(format!("exited with {status}; stderr: {tail}")));
        }
        Ok(())
    }
}

impl Restorer for ExternalRestorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn description(&self) -> String {
        format!("subprocess `{} {}`", self.program, self.args.join(" "))
    }

    fn restore(&self, x: &Image, strength: DegradationStrength) -> Result<Image> {
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        let dir = tempfile::tempdir().map_err(|e| self.fail(e.to_string()))?;
        let input = dir.path().join("input.cdt");
        let output = dir.path().join("output.cdt");
        write_image_tensor(&input, x)?;
        self.run(
            input,
            output.clone(),
            dir.path().join("stderr.log"),
            strength.beta(),
        )?;
        let restored = read_image_tensor(&output)
            .map_err(|e| self.fail(format!("malformed output tensor: {e}")))?;
        x.ensure_same_shape(&restored)
            .map_err(|e| self.fail(format!("output shape: {e}")))?;
        Ok(restored)
    }
}
