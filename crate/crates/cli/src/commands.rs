//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sgtv::metrics::ssim;
use sgtv::phantom::{noise_sigma, simulate, NoiseSpec};
use sgtv::sampling::{generate, undersampling_factor, PatternSpec};
use sgtv::{io, make_anisotropy, AdmmConfig, AdmmSolver, EdgeParam, Image, PriorKind};

use crate::config::{load_side, ExperimentConfig, PatternEntry, Source};
use crate::error::{CliError, Result};
use crate::sweep::{best_rows, quality, report, run_sweep, write_stats, write_timings};

#[derive(Debug, Parser)]
#[command(name = "sgtv", version, about = "Structure-guided TV reconstruction of undersampled MRI")]
pub struct Cli {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Base seed for noise and random sampling patterns.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for sweeps; 0 uses all cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate noisy undersampled k-space data from a ground truth.
    Simulate(SimulateArgs),
    /// Reconstruct an image from k-space data.
    Reconstruct(ReconstructArgs),
    /// Run the configured parameter sweep.
    Sweep,
    /// PSNR and SSIM between a reference and a test image.
    Metrics(MetricsArgs),
    /// Write an image as 8-bit binary PGM.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `phantom:t1`, `phantom:t2` or an image file; defaults to the first
    /// configured ground truth.
    #[arg(long)]
    pub ground_truth: Option<String>,
    /// Sampling pattern token such as `radial_golden:16`.
    #[arg(long)]
    pub pattern: Option<String>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub phantom_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// k-space data file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Sampling pattern file.
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    #[arg(long, default_value = "tv")]
    pub prior: PriorKind,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub eta: f64,
    /// Side-information image (file or `phantom:t1|t2`).
    #[arg(long)]
    pub side: Option<String>,
    /// Noise level of the simulated scan behind a phantom side image.
    #[arg(long)]
    pub side_noise: Option<f64>,
    /// Reference image for quality metrics.
    #[arg(long)]
    pub ground_truth: Option<String>,
    #[arg(long)]
    pub outer: Option<usize>,
    #[arg(long)]
    pub inner: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub reference: PathBuf,
    pub test: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub peak: f64,
    /// Also write the SSIM map as an image.
    #[arg(long)]
    pub ssim_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub input: PathBuf,
    /// Output file; defaults to the input name with `.pgm` in `--out`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Value mapped to black.
    #[arg(long, default_value_t = 0.0)]
    pub min: f64,
    /// Value mapped to white.
    #[arg(long, default_value_t = 1.0)]
    pub max: f64,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                1
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match run(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
            CliError::Data { source: sgtv::Error::Io(io), .. } if io.kind() == std::io::ErrorKind::NotFound => {
                CliError::usage(format!("config file {} not found", path.display()))
            }
            e => e,
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output).map_err(|e| CliError::data(&cfg.output, e.into()))?;
    Ok(cfg.output.clone())
}

fn io_err(path: &Path) -> impl Fn(sgtv::Error) -> CliError + '_ {
    move |e| CliError::data(path, e)
}

pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(cli)?;
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&mut cfg, a, stdout),
        Command::Reconstruct(a) => cmd_reconstruct(&cfg, a, stdout, stderr),
        Command::Sweep => cmd_sweep(&cfg, cli.jobs.unwrap_or(0), stdout),
        Command::Metrics(a) => cmd_metrics(a, stdout),
        Command::Render(a) => cmd_render(&cfg, cli.out.is_some(), a, stdout),
    }
}

fn cmd_simulate(cfg: &mut ExperimentConfig, a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let here = Path::new(".");
    let source = match &a.ground_truth {
        Some(s) => Source::parse(s, here)?,
        None => cfg.ground_truth[0].clone(),
    };
    if let Some(n) = a.phantom_size {
        cfg.phantom_size = n;
    }
    let pattern_entry = match &a.pattern {
        Some(p) => PatternEntry::parse(p, cfg.seed)?,
        None => cfg.patterns[0].clone(),
    };
    let fraction = a.noise.unwrap_or(cfg.noise_fraction);
    if !(fraction >= 0.0) {
        return Err(CliError::usage("noise must be nonnegative"));
    }
    let gt = source.load(cfg.phantom_size)?;
    let (h, w) = gt.shape();
    let pattern = generate(&PatternSpec::new(pattern_entry.scheme.clone(), h, w))?;
    let seed = cfg.noise_seed(0);
    let data = simulate(&gt, &pattern, NoiseSpec { fraction, seed })?;

    let dir = out_dir(cfg)?;
    let paths = [dir.join("data.kdat"), dir.join("pattern.txt"), dir.join("ground_truth.rimg")];
    io::save_kspace(&paths[0], &data).map_err(io_err(&paths[0]))?;
    io::save_pattern(&paths[1], &pattern).map_err(io_err(&paths[1]))?;
    io::save_image(&paths[2], &gt).map_err(io_err(&paths[2]))?;
    writeln!(out, "pattern={} samples={} undersampling={:.4}", pattern_entry.label, pattern.len(), undersampling_factor(&pattern))?;
    writeln!(out, "seed={seed} sigma={}", sgtv::format::sig(noise_sigma(&gt, fraction)))?;
    writeln!(out, "wrote {}", dir.display())?;
    Ok(())
}

fn cmd_reconstruct(
    cfg: &ExperimentConfig,
    a: &ReconstructArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let here = Path::new(".");
    let dir_default = |name: &str| cfg.output.join(name);
    let data_path = a.data.clone().or(cfg.data.clone()).unwrap_or_else(|| dir_default("data.kdat"));
    let pattern_path = a
        .pattern
        .clone()
        .or(cfg.pattern_file.clone())
        .unwrap_or_else(|| dir_default("pattern.txt"));
    let data = io::load_kspace(&data_path).map_err(io_err(&data_path))?;
    let pattern = io::load_pattern(&pattern_path).map_err(io_err(&pattern_path))?;
    if data.len() != pattern.len() {
        return Err(CliError::data(
            &data_path,
            sgtv::Error::LengthMismatch { expected: pattern.len(), found: data.len() },
        ));
    }
    // phantoms are rendered at the size of the data grid
    let size = pattern.shape().0;
    let side_noise = a.side_noise.unwrap_or(cfg.side_noise);
    let side = a
        .side
        .as_deref()
        .map(|s| load_side(&Source::parse(s, here)?, size, side_noise, cfg.side_seed(0)))
        .transpose()?;
    if a.prior == PriorKind::Tv && side.is_some() {
        writeln!(err, "warning: prior tv ignores the side-information image")?;
    }
    if a.prior.uses_side_info() && side.is_none() {
        return Err(CliError::usage(format!("prior {} requires --side", a.prior)));
    }
    let side = if a.prior.uses_side_info() { side } else { None };
    let m = make_anisotropy(a.prior, pattern.shape(), side.as_ref(), EdgeParam::new(a.eta)?)?;
    let mut admm = AdmmConfig {
        alpha: a.alpha.unwrap_or(cfg.admm.alpha),
        ..cfg.admm.clone()
    };
    if let Some(n) = a.outer {
        admm.outer_iterations = n;
    }
    if let Some(n) = a.inner {
        admm.inner_prox_iterations = n;
    }
    admm.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let (recon, diag) = AdmmSolver::new(&data, &pattern, &m, &admm)?.run()?;

    let dir = out_dir(cfg)?;
    let recon_path = dir.join("recon.rimg");
    io::save_image(&recon_path, &recon).map_err(io_err(&recon_path))?;
    let diag_path = dir.join("diagnostics.csv");
    fs::write(&diag_path, diag.to_csv()).map_err(|e| CliError::data(&diag_path, e.into()))?;
    writeln!(
        out,
        "iterations={} converged={} objective={}",
        diag.records.len(),
        diag.converged,
        diag.final_objective().map(sgtv::format::sig).unwrap_or_default()
    )?;
    if let Some(gt) = &a.ground_truth {
        let gt = Source::parse(gt, here)?.load(size)?;
        let q = quality(&gt, &recon, cfg.peak)?;
        writeln!(out, "psnr_db={} ssim={}", sgtv::format::sig(q.psnr_db), sgtv::format::sig(q.ssim))?;
    }
    Ok(())
}

fn cmd_sweep(cfg: &ExperimentConfig, jobs: usize, out: &mut dyn Write) -> Result<()> {
    let result = run_sweep(cfg, jobs)?;
    let dir = out_dir(cfg)?;
    write_stats(&dir.join("stats.csv"), &result.rows)?;
    let best = best_rows(&result.rows);
    write_stats(&dir.join("best.csv"), &best)?;
    write_timings(&dir.join("timings.csv"), &result.timings)?;
    write!(out, "{}", report(&best))?;
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs, out: &mut dyn Write) -> Result<()> {
    if !(a.peak > 0.0) {
        return Err(CliError::usage("peak must be positive"));
    }
    let r = io::load_image(&a.reference).map_err(io_err(&a.reference))?;
    let t = io::load_image(&a.test).map_err(io_err(&a.test))?;
    let q = quality(&r, &t, a.peak)?;
    writeln!(out, "psnr_db={}", sgtv::format::sig(q.psnr_db))?;
    writeln!(out, "ssim={}", sgtv::format::sig(q.ssim))?;
    if let Some(path) = &a.ssim_map {
        io::save_image(path, &ssim(&r, &t)?.map).map_err(io_err(path))?;
    }
    Ok(())
}

/// Binary PGM (P5, maxval 255), mapping `[lo, hi]` linearly onto `[0, 255]`
/// with rounding half up and clipping.
pub fn to_pgm(img: &Image, lo: f64, hi: f64) -> Vec<u8> {
    let (h, w) = img.shape();
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend(img.as_slice().iter().map(|&v| {
        let t = (255.0 * (v - lo) / (hi - lo) + 0.5).floor();
        t.clamp(0.0, 255.0) as u8
    }));
    bytes
}

fn cmd_render(cfg: &ExperimentConfig, out_given: bool, a: &RenderArgs, out: &mut dyn Write) -> Result<()> {
    if !(a.max > a.min) {
        return Err(CliError::usage("--max must exceed --min"));
    }
    let img = io::load_image(&a.input).map_err(io_err(&a.input))?;
    let target = match &a.output {
        Some(p) => p.clone(),
        None => {
            let name = a.input.with_extension("pgm");
            let name = name.file_name().expect("input names a file");
            if out_given {
                out_dir(cfg)?.join(name)
            } else {
                a.input.with_extension("pgm")
            }
        }
    };
    fs::write(&target, to_pgm(&img, a.min, a.max)).map_err(|e| CliError::data(&target, e.into()))?;
    writeln!(out, "wrote {}", target.display())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_rounds_half_up_and_clips() {
        let img = Image::from_vec(1, 5, vec![-0.5, 0.0, 1.25 / 255.0, 0.5, 2.0]).unwrap();
        let bytes = to_pgm(&img, 0.0, 1.0);
        assert!(bytes.starts_with(b"P5\n5 1\n255\n"));
        assert_eq!(&bytes[bytes.len() - 5..], &[0, 0, 1, 128, 255]);
    }

    #[test]
    fn flags_are_global() {
        let cli = Cli::try_parse_from(["sgtv", "sweep", "--seed", "3", "--jobs", "2"]).unwrap();
        assert_eq!(cli.seed, Some(3));
        assert_eq!(cli.jobs, Some(2));
    }
}
