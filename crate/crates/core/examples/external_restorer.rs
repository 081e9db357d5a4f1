//! Drives the restoration loop with a model living in another process.
//!
//! Any program accepting `--input <path> --beta <float> --output <path>` and
//! exchanging tensor files works. By default this example uses a shell
//! script that copies its input, so the loop behaves like the identity.
//!
//! ```text
//! cargo run --example external_restorer -- "python3 serve.py --model weights.pt"
//! ```

use std::time::Duration;

use convdiff::{degrade, external_restorer, infer, kernel_to_transfer, make_gaussian_kernel};
use convdiff::{
    make_test_image, psnr, DegradationStrength, GaussianSpec, InferenceConfig, TestImageKind,
};

const COPY_SCRIPT: &str = r#"while [ $# -gt 0 ]; do
  case "$1" in
    --input) in="$2"; shift 2 ;;
    --output) out="$2"; shift 2 ;;
    *) shift ;;
  esac
done
cp "$in" "$out"
"#;

fn main() -> convdiff::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let command = match std::env::args().nth(1) {
        Some(cmd) => cmd,
        None => {
            let script = dir.path().join("copy.sh");
            std::fs::write(&script, COPY_SCRIPT).expect("write script");
            format!("sh {}", script.display())
        }
    };

    let x0 = make_test_image(TestImageKind::Broadband, 64, 64, 4)?;
    let h = kernel_to_transfer(
        &make_gaussian_kernel(&GaussianSpec::with_sigma(2.0)?),
        64,
        64,
    )?;
    let y = degrade(&x0, &h, DegradationStrength::BLURRED)?;

    let restorer = external_restorer(&command)?.with_timeout(Duration::from_secs(30));
    let outcome = infer(&y, &restorer, &InferenceConfig::new(3)?)?;
    println!("restorer: {command}");
    println!("blurred psnr={:.3}", psnr(&y, &x0)?);
    println!("output  psnr={:.3}", psnr(&outcome.output, &x0)?);
    Ok(())
}
