//! Progressive blurring and deblurring in the frequency domain.
//!
//! A blur kernel `h` with transfer function `H` is raised to a fractional
//! power `H^beta`, giving a continuous path from a sharp image (`beta = 0`) to
//! its fully blurred version (`beta = 1`). Restoration walks that path
//! backwards, re-estimating the kernel from the current sharp estimate at
//! every step.
//!
//! ```
//! use convdiff::{degrade, kernel_to_transfer, make_gaussian_kernel, make_test_image};
//! use convdiff::{DegradationStrength, GaussianSpec, TestImageKind};
//!
//! let x0 = make_test_image(TestImageKind::Broadband, 64, 64, 1).unwrap();
//! let k = make_gaussian_kernel(&GaussianSpec::with_sigma(2.0).unwrap());
//! let h = kernel_to_transfer(&k, 64, 64).unwrap();
//! let half = degrade(&x0, &h, DegradationStrength::new(0.5).unwrap()).unwrap();
//! assert_eq!(half.shape(), x0.shape());
//! ```

pub mod cli;
pub mod degradation;
pub mod error;
pub mod image;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod pipeline;
pub mod restorers;
pub mod spectral;
pub mod synth;
pub mod wiener;

pub use degradation::{
    degrade, degrade_unclamped, effective_sigma, fractional_power, trajectory, validate_kernel,
    validate_kernel_with, DegradationStrength, KernelValidityReport, ValidityTolerances,
};
pub use error::{Error, Result};
pub use image::{Image, Plane};
pub use kernel::Kernel;
pub use metrics::{evaluate, mse, psnr, ssim, MetricReport};
pub use pipeline::{
    gen_training_samples, infer, BetaLaw, InferenceConfig, InferenceOutcome, TrainingTriple,
};
pub use restorers::{
    external_restorer, identity_restorer, oracle_restorer, wiener_deconv_restorer, Restorer,
};
pub use spectral::{
    fft2, fft2_plane, ifft2, kernel_to_transfer, transfer_to_kernel, Spectrum, TransferFunction,
};
pub use synth::{
    make_color_test_image, make_gaussian_kernel, make_test_image, GaussianSpec, TestImageKind,
};
pub use wiener::{estimate_from_images, wiener_estimate, WienerConfig, WienerEstimate};
