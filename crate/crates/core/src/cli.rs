//! Command-line front end.
//!
//! Exit status is 0 on success, 1 when the arguments cannot be parsed and 2
//! when the command itself fails. Numeric settings can also come from a
//! `key=value` file given with `--config`; flags win over the file, the file
//! wins over built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::degradation::{degrade, trajectory, validate_kernel, DegradationStrength};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{read_image, read_kernel, write_image, write_image_tensor, write_kernel, Config};
use crate::kernel::Kernel;
use crate::metrics::{evaluate, MetricReport};
use crate::pipeline::{gen_training_samples, infer, BetaLaw, InferenceConfig, InferenceOutcome};
use crate::restorers::{
    external_restorer, identity_restorer, wiener_deconv_restorer, Restorer, DEFAULT_SNR_REG,
};
use crate::spectral::{fft2_plane, kernel_to_transfer, transfer_to_kernel, TransferFunction};
use crate::synth::{
    make_color_test_image, make_gaussian_kernel, make_test_image, GaussianSpec, TestImageKind,
    DEFAULT_KERNEL_SIZE,
};
use crate::wiener::{estimate_from_images, WienerConfig};
use crate::{degradation::effective_sigma, wiener::DEFAULT_REGULARIZATION};

#[derive(Debug, Parser)]
#[command(
    name = "convdiff",
    version,
    about = "Fractional-power blur trajectories and iterative deblurring"
)]
struct Cli {
    /// key=value defaults for numeric options
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Blur a sharp image with a kernel at a given strength.
    Blur(BlurArgs),
    /// Write the n+1 images of a blur trajectory and their spectra.
    Trajectory(TrajectoryArgs),
    /// Estimate the kernel relating a sharp and a blurred image.
    EstimateKernel(EstimateArgs),
    /// Restore a blurred image with the iterative loop.
    Restore(RestoreArgs),
    /// Generate training triples as tensor files.
    GenData(GenDataArgs),
    /// Compare two images (PSNR, SSIM, MSE).
    Evaluate(EvaluateArgs),
    /// Write a synthetic test image.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// Kernel file; overrides --sigma
    #[arg(long, value_name = "FILE")]
    kernel: Option<PathBuf>,
    /// Gaussian kernel width
    #[arg(long)]
    sigma: Option<f64>,
    /// Gaussian kernel side length (odd)
    #[arg(long)]
    size: Option<usize>,
}

#[derive(Debug, Args)]
struct OutputDepth {
    /// Bits per sample for written images (8 or 16)
    #[arg(long)]
    bits: Option<u8>,
}

#[derive(Debug, Args)]
struct BlurArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Degradation strength in [0, 1]
    #[arg(long)]
    beta: Option<f64>,
    #[command(flatten)]
    depth: OutputDepth,
}

#[derive(Debug, Args)]
struct TrajectoryArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(short)]
    n: Option<usize>,
    #[command(flatten)]
    depth: OutputDepth,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Sharp image
    #[arg(long)]
    sharp: PathBuf,
    /// Blurred image
    #[arg(long)]
    blurred: PathBuf,
    /// Kernel file to write
    #[arg(short, long)]
    output: PathBuf,
    /// Side length of the extracted kernel
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    regularization: Option<f64>,
}

#[derive(Debug, Args)]
struct RestoreArgs {
    /// Blurred image, or a directory with --batch
    #[arg(short, long)]
    input: PathBuf,
    /// Restored image, or a directory with --batch
    #[arg(short, long)]
    output: PathBuf,
    /// wiener, identity or external:<command>
    #[arg(long)]
    restorer: Option<String>,
    #[arg(short)]
    n: Option<usize>,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Regularization of the wiener restorer
    #[arg(long)]
    snr_reg: Option<f64>,
    /// Seconds before an external restorer is killed
    #[arg(long)]
    timeout: Option<f64>,
    /// Sharp image; metrics for input and output are printed
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Write per-step intermediates here
    #[arg(long, value_name = "DIR")]
    dump_dir: Option<PathBuf>,
    /// Treat input and output as directories of .pgm/.ppm files
    #[arg(long)]
    batch: bool,
    #[command(flatten)]
    depth: OutputDepth,
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// half_open, open or fixed:<beta>
    #[arg(long)]
    beta_law: Option<String>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    a: PathBuf,
    b: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(short, long)]
    output: PathBuf,
    /// broadband, checkerboard, impulse, constant, band_limited
    #[arg(long, default_value = "broadband")]
    kind: String,
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Three-channel broadband image
    #[arg(long)]
    color: bool,
    #[command(flatten)]
    depth: OutputDepth,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Blur(a) => blur(&cfg, a),
        Command::Trajectory(a) => run_trajectory(&cfg, a),
        Command::EstimateKernel(a) => estimate_kernel(&cfg, a),
        Command::Restore(a) => restore(&cfg, a),
        Command::GenData(a) => gen_data(&cfg, a),
        Command::Evaluate(a) => {
            let report = evaluate(&read_image(&a.a)?, &read_image(&a.b)?)?;
            println!("{report}");
            Ok(())
        }
        Command::Synth(a) => synth(&cfg, a),
    }
}

fn maxval(cfg: &Config, depth: &OutputDepth) -> Result<u16> {
    match cfg.resolve(depth.bits, "bits", 16)? {
        8 => Ok(255),
        16 => Ok(65535),
        other => Err(Error::invalid(format!(
            "--bits must be 8 or 16, got {other}"
        ))),
    }
}

fn load_kernel(cfg: &Config, args: &KernelArgs) -> Result<Kernel> {
    if let Some(path) = &args.kernel {
        return Ok(read_kernel(path)?.0);
    }
    let sigma = match args.sigma {
        Some(s) => s,
        None => cfg
            .get("sigma")?
            .ok_or_else(|| Error::invalid("no blur given: pass --kernel FILE or --sigma VALUE"))?,
    };
    let size = cfg.resolve(args.size, "size", DEFAULT_KERNEL_SIZE)?;
    Ok(make_gaussian_kernel(&GaussianSpec::new(size, sigma)?))
}

fn sigma_hint(args: &KernelArgs) -> Option<f64> {
    if args.kernel.is_some() {
        None
    } else {
        args.sigma
    }
}

fn transfer_for(cfg: &Config, args: &KernelArgs, img: &Image) -> Result<TransferFunction> {
    kernel_to_transfer(&load_kernel(cfg, args)?, img.height(), img.width())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("cannot create {}", dir.display()), e))
}

fn image_name(img: &Image, stem: &str) -> String {
    let ext = if img.channels() == 1 { "pgm" } else { "ppm" };
    format!("{stem}.{ext}")
}

fn blur(cfg: &Config, a: BlurArgs) -> Result<()> {
    let x0 = read_image(&a.input)?;
    let h = transfer_for(cfg, &a.kernel, &x0)?;
    let strength = DegradationStrength::new(cfg.resolve(a.beta, "beta", 1.0)?)?;
    write_image(
        &a.output,
        &degrade(&x0, &h, strength)?,
        maxval(cfg, &a.depth)?,
    )
}

fn run_trajectory(cfg: &Config, a: TrajectoryArgs) -> Result<()> {
    let x0 = read_image(&a.input)?;
    let h = transfer_for(cfg, &a.kernel, &x0)?;
    let n = cfg.resolve(a.n, "n", 4)?;
    let maxval = maxval(cfg, &a.depth)?;
    let frames = trajectory(&x0, &h, n)?;
    let spectra = frames
        .iter()
        .map(|f| fft2_plane(&f.luminance()))
        .collect::<Result<Vec<_>>>()?;
    // One scale for all frames so attenuation stays visible.
    let scale = spectra
        .iter()
        .map(|s| s.max_log_magnitude())
        .fold(0.0, f64::max);
    create_dir(&a.out_dir)?;
    for (t, (frame, spectrum)) in frames.iter().zip(&spectra).enumerate() {
        write_image(
            a.out_dir.join(image_name(frame, &format!("x_{t}"))),
            frame,
            maxval,
        )?;
        let mag = Image::from_planes(vec![spectrum.log_magnitude_centered(Some(scale))])?;
        write_image(a.out_dir.join(format!("spectrum_{t}.pgm")), &mag, maxval)?;
        println!(
            "t={t} beta={} hf_energy={:.6e}",
            t as f64 / n as f64,
            spectrum.high_frequency_energy()
        );
    }
    Ok(())
}

fn estimate_kernel(cfg: &Config, a: EstimateArgs) -> Result<()> {
    let sharp = read_image(&a.sharp)?;
    let blurred = read_image(&a.blurred)?;
    let reg = cfg.resolve(a.regularization, "regularization", DEFAULT_REGULARIZATION)?;
    let size = cfg.resolve(a.size, "size", DEFAULT_KERNEL_SIZE)?;
    let est = estimate_from_images(&sharp, &blurred, &WienerConfig::new(reg, true)?)?;
    let report = validate_kernel(&est.transfer, size)?;
    let kernel = transfer_to_kernel(&est.transfer, size)?.to_kernel()?;
    write_kernel(&a.output, &kernel, None)?;
    println!("{report}");
    println!("excited_fraction={:.6}", est.excited_fraction());
    println!("dc_flagged={}", est.dc_flagged);
    println!("effective_sigma={:.6}", effective_sigma(&est.transfer));
    Ok(())
}

fn build_restorer(cfg: &Config, a: &RestoreArgs, y: &Image) -> Result<Box<dyn Restorer>> {
    let choice = match &a.restorer {
        Some(r) => r.clone(),
        None => cfg.get_raw("restorer").unwrap_or("wiener").to_string(),
    };
    if let Some(command) = choice.strip_prefix("external:") {
        let mut r = external_restorer(command)?;
        let timeout = match a.timeout {
            Some(secs) => Some(secs),
            None => cfg.get::<f64>("timeout")?,
        };
        if let Some(secs) = timeout {
            if !(secs.is_finite() && secs > 0.0) {
                return Err(Error::invalid(
                    "--timeout must be a positive number of seconds",
                ));
            }
            r = r.with_timeout(Duration::from_secs_f64(secs));
        }
        return Ok(Box::new(r));
    }
    match choice.as_str() {
        "identity" => Ok(Box::new(identity_restorer())),
        "wiener" => {
            let snr = cfg.resolve(a.snr_reg, "snr_reg", DEFAULT_SNR_REG)?;
            Ok(Box::new(wiener_deconv_restorer(
                transfer_for(cfg, &a.kernel, y)?,
                snr,
            )?))
        }
        other => Err(Error::invalid(format!(
            "unknown restorer `{other}`: use wiener, identity or external:<command>"
        ))),
    }
}

fn dump_steps(dir: &Path, outcome: &InferenceOutcome, maxval: u16) -> Result<()> {
    create_dir(dir)?;
    for step in &outcome.steps {
        let t = step.t;
        write_image(
            dir.join(image_name(&step.x_t, &format!("step{t}_x_t"))),
            &step.x_t.clamped(),
            maxval,
        )?;
        write_image(
            dir.join(image_name(&step.x0_hat, &format!("step{t}_x0_hat"))),
            &step.x0_hat.clamped(),
            maxval,
        )?;
        write_image_tensor(dir.join(format!("step{t}_x_t.cdt")), &step.x_t)?;
        write_image_tensor(dir.join(format!("step{t}_x0_hat.cdt")), &step.x0_hat)?;
    }
    Ok(())
}

fn restore_one(
    cfg: &Config,
    a: &RestoreArgs,
    input: &Path,
    output: &Path,
    dump: Option<&Path>,
) -> Result<Option<(MetricReport, MetricReport)>> {
    let y = read_image(input)?;
    let restorer = build_restorer(cfg, a, &y)?;
    let mut inference = InferenceConfig::new(cfg.resolve(a.n, "n", 5)?)?;
    inference.record_intermediates = dump.is_some();
    let outcome = infer(&y, restorer.as_ref(), &inference)?;
    if let Some(dir) = dump {
        dump_steps(dir, &outcome, maxval(cfg, &a.depth)?)?;
    }
    write_image(output, &outcome.output, maxval(cfg, &a.depth)?)?;
    match &a.reference {
        Some(path) => {
            let reference = read_image(path)?;
            Ok(Some((
                evaluate(&y, &reference)?,
                evaluate(&outcome.output, &reference)?,
            )))
        }
        None => Ok(None),
    }
}

fn restore(cfg: &Config, a: RestoreArgs) -> Result<()> {
    if !a.batch {
        if let Some((before, after)) =
            restore_one(cfg, &a, &a.input, &a.output, a.dump_dir.as_deref())?
        {
            println!("input_psnr={:.4}", before.psnr_db);
            println!("input_ssim={:.4}", before.ssim);
            println!("{after}");
        }
        return Ok(());
    }
    if a.reference.is_some() {
        return Err(Error::invalid(
            "--reference cannot be combined with --batch",
        ));
    }
    let entries = fs::read_dir(&a.input)
        .map_err(|e| Error::io(format!("cannot list {}", a.input.display()), e))?;
    let mut inputs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("pgm" | "ppm")))
        .collect();
    inputs.sort();
    create_dir(&a.output)?;
    let results: Vec<(PathBuf, Result<()>)> = inputs
        .par_iter()
        .map(|input| {
            let name = input.file_name().expect("listed file has a name");
            let output = a.output.join(name);
            let dump = a
                .dump_dir
                .as_ref()
                .map(|d| d.join(Path::new(name).with_extension("")));
            let res = restore_one(cfg, &a, input, &output, dump.as_deref()).map(|_| ());
            (input.clone(), res)
        })
        .collect();
    let mut failed = 0;
    for (input, res) in &results {
        match res {
            Ok(()) => println!("ok {}", input.display()),
            Err(e) => {
                failed += 1;
                eprintln!("failed {}: {e}", input.display());
            }
        }
    }
    if failed > 0 {
        return Err(Error::invalid(format!(
            "{failed} of {} images failed",
            results.len()
        )));
    }
    Ok(())
}

fn gen_data(cfg: &Config, a: GenDataArgs) -> Result<()> {
    let x0 = read_image(&a.input)?;
    let kernel = load_kernel(cfg, &a.kernel)?;
    let h = kernel_to_transfer(&kernel, x0.height(), x0.width())?;
    let count = cfg.resolve(a.count, "count", 16)?;
    let seed = cfg.resolve(a.seed, "seed", 0)?;
    let law: BetaLaw = match &a.beta_law {
        Some(s) => s.parse()?,
        None => cfg.get_raw("beta_law").unwrap_or("half_open").parse()?,
    };
    let triples = gen_training_samples(&x0, &h, count, law, seed)?;
    create_dir(&a.out_dir)?;
    write_image_tensor(a.out_dir.join("x0.cdt"), &x0)?;
    write_kernel(a.out_dir.join("kernel.txt"), &kernel, sigma_hint(&a.kernel))?;
    let mut manifest = String::from("index\tbeta\tx_beta\tx0\n");
    for (i, triple) in triples.iter().enumerate() {
        let name = format!("x_beta_{i:05}.cdt");
        write_image_tensor(a.out_dir.join(&name), &triple.x_beta)?;
        manifest.push_str(&format!("{i}\t{}\t{name}\tx0.cdt\n", triple.beta));
    }
    let path = a.out_dir.join("manifest.tsv");
    fs::write(&path, manifest)
        .map_err(|e| Error::io(format!("cannot write {}", path.display()), e))?;
    println!("wrote {count} samples to {}", a.out_dir.display());
    Ok(())
}

fn synth(cfg: &Config, a: SynthArgs) -> Result<()> {
    let seed = cfg.resolve(a.seed, "seed", 0)?;
    let img = if a.color {
        make_color_test_image(a.height, a.width, seed)?
    } else {
        make_test_image(a.kind.parse::<TestImageKind>()?, a.height, a.width, seed)?
    };
    write_image(&a.output, &img, maxval(cfg, &a.depth)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["convdiff", "frobnicate"]), 1);
        assert_eq!(run(["convdiff", "blur", "--input"]), 1);
        assert_eq!(run(["convdiff", "--help"]), 0);
    }

    #[test]
    fn missing_file_exits_two() {
        assert_eq!(
            run([
                "convdiff",
                "evaluate",
                "/nonexistent/a.pgm",
                "/nonexistent/b.pgm"
            ]),
            2
        );
    }
}
