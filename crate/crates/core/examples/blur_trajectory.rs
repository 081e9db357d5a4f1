//! Walks a sharp image to its fully blurred version in `n` equal steps and
//! reports how much high-frequency energy survives at each one.
//!
//! ```text
//! cargo run --example blur_trajectory -- [sigma] [n]
//! ```

use convdiff::{fft2_plane, kernel_to_transfer, make_gaussian_kernel, make_test_image, trajectory};
use convdiff::{GaussianSpec, TestImageKind};

fn main() -> convdiff::Result<()> {
    let mut args = std::env::args().skip(1);
    let sigma: f64 = args.next().map_or(3.0, |s| s.parse().expect("sigma"));
    let n: usize = args.next().map_or(4, |s| s.parse().expect("n"));

    let x0 = make_test_image(TestImageKind::Broadband, 128, 128, 7)?;
    let kernel = make_gaussian_kernel(&GaussianSpec::with_sigma(sigma)?);
    let h = kernel_to_transfer(&kernel, 128, 128)?;

    let out = std::env::temp_dir().join("convdiff_trajectory");
    std::fs::create_dir_all(&out).expect("temp dir");
    for (t, frame) in trajectory(&x0, &h, n)?.iter().enumerate() {
        let hf = fft2_plane(&frame.luminance())?.high_frequency_energy();
        println!("t={t} beta={:.3} hf_energy={hf:.4e}", t as f64 / n as f64);
        convdiff::io::write_image(out.join(format!("x_{t}.pgm")), frame, 65535)?;
    }
    println!("frames in {}", out.display());
    Ok(())
}
