//! PSNR and SSIM for a few familiar degradations.

use convdiff::{degrade, evaluate, kernel_to_transfer, make_gaussian_kernel, make_test_image};
use convdiff::{DegradationStrength, GaussianSpec, TestImageKind};

fn main() -> convdiff::Result<()> {
    let x0 = make_test_image(TestImageKind::Broadband, 96, 96, 3)?;
    let offset = x0.map(|v| (v + 0.05).min(1.0))?;
    let h = kernel_to_transfer(
        &make_gaussian_kernel(&GaussianSpec::with_sigma(2.0)?),
        96,
        96,
    )?;
    let blurred = degrade(&x0, &h, DegradationStrength::BLURRED)?;
    let inverted = x0.map(|v| 1.0 - v)?;

    for (label, img) in [
        ("identical", &x0),
        ("offset", &offset),
        ("blurred", &blurred),
        ("inverted", &inverted),
    ] {
        println!("[{label}]\n{}\n", evaluate(img, &x0)?);
    }
    Ok(())
}
