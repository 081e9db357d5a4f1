//! Recovers a blur kernel from a sharp/blurred pair with the Wiener estimate
//! and checks that the result is a usable kernel.

use convdiff::{degrade, estimate_from_images, kernel_to_transfer, make_gaussian_kernel};
use convdiff::{make_test_image, transfer_to_kernel, validate_kernel};
use convdiff::{DegradationStrength, GaussianSpec, TestImageKind, WienerConfig};

fn main() -> convdiff::Result<()> {
    let x0 = make_test_image(TestImageKind::Broadband, 128, 128, 11)?;
    let truth = make_gaussian_kernel(&GaussianSpec::with_sigma(2.5)?);
    let h = kernel_to_transfer(&truth, 128, 128)?;
    let y = degrade(&x0, &h, DegradationStrength::BLURRED)?;

    let est = estimate_from_images(&x0, &y, &WienerConfig::default())?;
    println!("excited bins: {:.1}%", 100.0 * est.excited_fraction());
    println!("{}", validate_kernel(&est.transfer, truth.size())?);

    let recovered = transfer_to_kernel(&est.transfer, truth.size())?.to_kernel()?;
    let err = truth
        .taps()
        .iter()
        .zip(recovered.taps())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("max tap error: {err:.3e}");
    Ok(())
}
