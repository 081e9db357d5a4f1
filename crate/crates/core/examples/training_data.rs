//! Generates partially blurred training samples and writes them in the
//! tensor format an external model would read.

use convdiff::io::{read_image_tensor, write_image_tensor};
use convdiff::{gen_training_samples, kernel_to_transfer, make_gaussian_kernel, make_test_image};
use convdiff::{BetaLaw, GaussianSpec, TestImageKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> convdiff::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let spec = GaussianSpec::sample(&mut rng);
    println!("kernel sigma={:.3} size={}", spec.sigma, spec.size);

    let x0 = make_test_image(TestImageKind::Broadband, 64, 64, 1)?;
    let h = kernel_to_transfer(&make_gaussian_kernel(&spec), 64, 64)?;
    let samples = gen_training_samples(&x0, &h, 4, BetaLaw::HalfOpen, 99)?;

    let dir = std::env::temp_dir().join("convdiff_training");
    std::fs::create_dir_all(&dir).expect("temp dir");
    for (i, s) in samples.iter().enumerate() {
        let path = dir.join(format!("x_beta_{i}.cdt"));
        write_image_tensor(&path, &s.x_beta)?;
        let back = read_image_tensor(&path)?;
        println!(
            "sample {i}: beta={:.4} mean={:.4} file={}",
            s.beta,
            back.mean(),
            path.display()
        );
    }
    Ok(())
}
