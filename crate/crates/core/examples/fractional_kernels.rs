//! Fractional powers of a Gaussian transfer function.
//!
//! For a Gaussian, `H^beta` is again a Gaussian with width `sigma * sqrt(beta)`,
//! and `H^a * H^b = H^(a+b)`. The check uses kernels wide enough that
//! truncation does not interfere.

use convdiff::degradation::{effective_sigma, fractional_power};
use convdiff::{kernel_to_transfer, make_gaussian_kernel, validate_kernel};
use convdiff::{DegradationStrength, GaussianSpec};

fn main() -> convdiff::Result<()> {
    let (size, sigma) = (128, 3.0);
    let spec = GaussianSpec::untruncated(sigma)?;
    let h = kernel_to_transfer(&make_gaussian_kernel(&spec), size, size)?;

    println!("beta  sigma_eff  expected  valid");
    for beta in [0.25, 0.5, 0.75, 1.0] {
        let hb = fractional_power(&h, DegradationStrength::new(beta)?);
        let report = validate_kernel(&hb, spec.size)?;
        println!(
            "{beta:<5} {:<10.4} {:<9.4} {}",
            effective_sigma(&hb),
            sigma * beta.sqrt(),
            report.is_valid
        );
    }

    let a = fractional_power(&h, DegradationStrength::new(0.3)?);
    let b = fractional_power(&h, DegradationStrength::new(0.45)?);
    let ab = fractional_power(&h, DegradationStrength::new(0.75)?);
    println!(
        "max |H^0.3 H^0.45 - H^0.75| = {:.3e}",
        a.multiply(&b)?.max_abs_diff(&ab)?
    );
    Ok(())
}
