//! Command-line interface: `simulate`, `reconstruct`, `denoise`, `benchmark`.
//!
//! Exit codes: 0 success, 2 usage or configuration error (including missing
//! or mismatched inputs), 1 failure while computing or writing results.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::error::Error;
use crate::harness::{
    gaussian_blob_cube, moving_rectangle_video, psnr, run_benchmark, simulate_snapshot, BenchmarkSpec, Descriptor,
    OperatorFamily, OperatorSpec, DEFAULT_MASK_DENSITY,
};
use crate::io::{read_measurement, read_signal, write_cube, write_measurement, write_signal, KeyValues};
use crate::operators::DifferenceOperator;
use crate::solvers::{reconstruct, AccelVariant, Algorithm, SolverConfig};
use crate::tensor::SignalTensor;
use crate::tvdenoise::tv_denoise;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20160127;
/// Bumped whenever a default parameter changes; recorded in every metadata file.
pub const DEFAULTS_VERSION: u32 = 1;
const SYNTHETIC_SIZE: usize = 64;

#[derive(Debug, Parser)]
#[command(name = "gaptv", version, about = "TV-regularized compressive sensing reconstruction")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn log_level(&self) -> log::LevelFilter {
        match self.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a noiseless snapshot measurement of a ground-truth signal
    Simulate(SimulateArgs),
    /// Reconstruct a signal from a measurement and its operator descriptor
    Reconstruct(ReconstructArgs),
    /// TV-denoise an image or cube by iterative clipping
    Denoise(DenoiseArgs),
    /// Run a PSNR benchmark described by a spec file
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OperatorArg {
    Hadamard,
    Cacti,
    Cassi,
}

impl From<OperatorArg> for OperatorFamily {
    fn from(a: OperatorArg) -> Self {
        match a {
            OperatorArg::Hadamard => OperatorFamily::Hadamard,
            OperatorArg::Cacti => OperatorFamily::Cacti,
            OperatorArg::Cassi => OperatorFamily::Cassi,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlgoArg {
    GapTv,
    AccGapTv,
    AdmmTv,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::GapTv => Algorithm::GapTv,
            AlgoArg::AccGapTv => Algorithm::AccGapTv,
            AlgoArg::AdmmTv => Algorithm::AdmmTv,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Ground truth: image (.pgm/.png), raw cube (.raw), `synthetic:video` or `synthetic:spectral`
    #[arg(long)]
    pub input: String,
    #[arg(long, value_enum)]
    pub operator: OperatorArg,
    /// Compression ratio for the Hadamard operator
    #[arg(long, default_value_t = 0.3)]
    pub csr: f64,
    /// Frame (band) count T; must match a cube input
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Mask file for coded-aperture operators (image or .mask)
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MASK_DENSITY)]
    pub mask_density: f64,
    /// Output prefix: writes `<out>.y`, `<out>.y.hdr` and `<out>.desc`
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub measurement: PathBuf,
    #[arg(long)]
    pub descriptor: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Option<AlgoArg>,
    /// Solver settings as key=value lines; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Acceleration variant: cumulative or delta-scaled
    #[arg(long)]
    pub accel: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub inner_iters: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Ground truth for PSNR; defaults to the one named in the descriptor
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output image (.pgm/.png) or cube (.raw); metadata goes to `<out>.meta`
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// TV weight for unit-range data (scaled by the input's value range)
    #[arg(long, default_value_t = 0.015, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// CSV output; overrides the spec's `output`
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Reconstruct(a) => cmd_reconstruct(&a),
        Command::Denoise(a) => cmd_denoise(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// `target` relative to `dir` when possible (files written side by side).
fn relative_to(target: &Path, dir: &Path) -> PathBuf {
    target
        .strip_prefix(dir)
        .map(Path::to_path_buf)
        .unwrap_or_else(|_| target.to_path_buf())
}

fn resolve(path: &Path, dir: &Path) -> PathBuf {
    if path.is_relative() {
        dir.join(path)
    } else {
        path.to_path_buf()
    }
}

fn load_truth(input: &str, frames: Option<usize>) -> CliResult<(SignalTensor, Option<PathBuf>)> {
    let t = frames.unwrap_or(8);
    match input {
        "synthetic:video" => Ok((moving_rectangle_video(SYNTHETIC_SIZE, SYNTHETIC_SIZE, t), None)),
        "synthetic:spectral" => Ok((gaussian_blob_cube(SYNTHETIC_SIZE, SYNTHETIC_SIZE, t), None)),
        path => {
            let path = PathBuf::from(path);
            let signal = read_signal(&path).map_err(CliError::usage)?;
            if let Some(f) = frames {
                if signal.shape().frames() > 1 && signal.shape().frames() != f {
                    return Err(CliError::usage(format!(
                        "--frames {f} does not match the {} input",
                        signal.shape()
                    )));
                }
            }
            let abs = fs::canonicalize(&path).unwrap_or(path);
            Ok((signal, Some(abs)))
        }
    }
}

/// Simulates `y = Φx` and writes the measurement and operator descriptor.
pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let (truth, truth_path) = load_truth(&a.input, a.frames)?;
    let family = OperatorFamily::from(a.operator);
    let spec = OperatorSpec {
        family,
        seed: a.seed,
        csr: a.csr,
        mask_density: a.mask_density,
        mask_file: a.mask.as_ref().map(|p| fs::canonicalize(p).unwrap_or_else(|_| p.clone())),
    };
    let op = spec.build(truth.shape()).map_err(CliError::usage)?;
    let y = simulate_snapshot(&truth, &op).map_err(CliError::runtime)?;
    info!(
        "simulated {} measurement: M = {}, N = {}, CSr = {:.5}",
        family.name(),
        op.n_rows(),
        op.n_cols(),
        op.csr()
    );

    let dir = a.out.parent().map(Path::to_path_buf).unwrap_or_default();
    let y_path = with_suffix(&a.out, ".y");
    let truth_path = match truth_path {
        Some(p) => p,
        None => {
            let p = with_suffix(&a.out, ".truth.raw");
            write_cube(&p, &truth).map_err(CliError::runtime)?;
            relative_to(&p, &dir)
        }
    };
    let desc = Descriptor {
        operator: spec,
        shape: truth.shape(),
        n_rows: op.n_rows(),
        value_range: truth.value_range,
        truth: Some(truth_path),
        measurement: Some(relative_to(&y_path, &dir)),
    };
    write_measurement(&y_path, &y).map_err(CliError::runtime)?;
    let mut kv = desc.to_key_values();
    kv.set("defaults_version", DEFAULTS_VERSION);
    kv.set("crate_version", env!("CARGO_PKG_VERSION"));
    kv.write(&with_suffix(&a.out, ".desc")).map_err(CliError::runtime)?;
    Ok(())
}

fn apply_config_file(cfg: &mut SolverConfig, kv: &KeyValues) -> crate::error::Result<()> {
    if let Some(v) = kv.get("algorithm") {
        cfg.algorithm = v.parse()?;
    }
    if let Some(v) = kv.parsed("lambda")? {
        cfg.lambda = v;
    }
    if let Some(v) = kv.parsed("eta")? {
        cfg.eta = v;
    }
    if let Some(v) = kv.parsed("delta")? {
        cfg.delta = v;
    }
    if let Some(v) = kv.get("accel") {
        cfg.accel_variant = v.parse()?;
    }
    if let Some(v) = kv.parsed("iters")? {
        cfg.max_outer_iters = v;
    }
    if let Some(v) = kv.parsed("inner_iters")? {
        cfg.inner_denoise_iters = v;
    }
    if let Some(v) = kv.parsed("tolerance")? {
        cfg.tolerance = v;
    }
    Ok(())
}

fn solver_config(a: &ReconstructArgs, data_range: f64) -> CliResult<SolverConfig> {
    let mut cfg = SolverConfig::default();
    if let Some(p) = &a.config {
        let kv = KeyValues::read(p).map_err(CliError::usage)?;
        apply_config_file(&mut cfg, &kv).map_err(CliError::usage)?;
    }
    if let Some(v) = a.algo {
        cfg.algorithm = v.into();
    }
    if let Some(v) = a.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = a.eta {
        cfg.eta = v;
    }
    if let Some(v) = a.delta {
        cfg.delta = v;
    }
    if let Some(v) = &a.accel {
        cfg.accel_variant = v.parse::<AccelVariant>().map_err(CliError::usage)?;
    }
    if let Some(v) = a.iters {
        cfg.max_outer_iters = v;
    }
    if let Some(v) = a.inner_iters {
        cfg.inner_denoise_iters = v;
    }
    if let Some(v) = a.tolerance {
        cfg.tolerance = v;
    }
    cfg.data_range = data_range;
    cfg.validate().map_err(CliError::usage)?;
    Ok(cfg)
}

/// Reconstructs from a simulated measurement; writes the estimate and `<out>.meta`.
pub fn cmd_reconstruct(a: &ReconstructArgs) -> CliResult<()> {
    let desc_kv = KeyValues::read(&a.descriptor).map_err(CliError::usage)?;
    let desc = Descriptor::from_key_values(&desc_kv).map_err(CliError::usage)?;
    let y = read_measurement(&a.measurement).map_err(CliError::usage)?;
    if y.len() != desc.n_rows {
        return Err(CliError::usage(format!(
            "measurement has {} entries, descriptor expects {}",
            y.len(),
            desc.n_rows
        )));
    }
    let (lo, hi) = desc.value_range;
    let cfg = solver_config(a, hi - lo)?;
    let op = desc.build_operator().map_err(CliError::usage)?;
    let d = DifferenceOperator::new(desc.shape);

    let desc_dir = a.descriptor.parent().unwrap_or_else(|| Path::new("."));
    let truth_path = a
        .truth
        .clone()
        .or_else(|| desc.truth.as_ref().map(|p| resolve(p, desc_dir)));
    let truth = match &truth_path {
        Some(p) if p.exists() => Some(read_signal(p).map_err(CliError::usage)?),
        _ => None,
    };

    let result = reconstruct(&op, &y, &d, &cfg).map_err(CliError::runtime)?;
    let estimate = result.x_hat.clone().with_range(lo, hi);
    write_signal(&a.out, &estimate).map_err(CliError::runtime)?;

    let mut meta = KeyValues::new();
    meta.set("crate_version", env!("CARGO_PKG_VERSION"));
    meta.set("defaults_version", DEFAULTS_VERSION);
    meta.set("descriptor", a.descriptor.display());
    meta.set("operator", desc.operator.family.name());
    meta.set("seed", desc.operator.seed);
    meta.set("m", op.n_rows());
    meta.set("n", op.n_cols());
    meta.set("csr", op.csr());
    for (k, v) in cfg.to_key_values() {
        meta.set(k, v);
    }
    meta.set("outer_iters_used", result.outer_iters_used);
    meta.set("wall_time_s", format!("{:.3}", result.wall_time));
    meta.set(
        "residual_history",
        result
            .residual_history
            .iter()
            .map(|r| format!("{r:e}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    if let Some(truth) = truth {
        let p = psnr(&truth, &estimate, truth.peak()).map_err(CliError::usage)?;
        info!("PSNR {:.2} dB", p.db);
        meta.set("psnr_db", if p.exact_match { "inf".to_string() } else { format!("{:.4}", p.db) });
        meta.set("exact_match", p.exact_match);
    }
    meta.write(&with_suffix(&a.out, ".meta")).map_err(CliError::runtime)?;
    Ok(())
}

/// Runs the clipping denoiser on an image or cube.
pub fn cmd_denoise(a: &DenoiseArgs) -> CliResult<()> {
    if !(a.lambda > 0.0 && a.lambda.is_finite()) {
        return Err(CliError::usage(format!("--lambda must be positive, got {}", a.lambda)));
    }
    if a.iters == 0 {
        return Err(CliError::usage("--iters must be positive"));
    }
    let x = read_signal(&a.input).map_err(CliError::usage)?;
    let d = DifferenceOperator::new(x.shape());
    let out = tv_denoise(&x, a.lambda * x.peak(), a.iters, &d).map_err(CliError::runtime)?;
    write_signal(&a.out, &out).map_err(CliError::runtime)
}

/// Runs a benchmark spec and writes its CSV. Failed cells are recorded, not fatal.
pub fn cmd_benchmark(a: &BenchmarkArgs) -> CliResult<()> {
    let mut spec = BenchmarkSpec::read(&a.spec).map_err(CliError::usage)?;
    if let Some(out) = &a.out {
        spec.output_path = out.clone();
    }
    if let Some(w) = a.workers {
        spec.workers = w;
    }
    spec.validate().map_err(CliError::usage)?;
    let rows = run_benchmark(&spec).map_err(CliError::runtime)?;
    let failed = rows.iter().filter(|r| r.is_failure()).count();
    info!("{} rows written to {}, {failed} failed", rows.len(), spec.output_path.display());
    Ok(())
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::runtime(e)
    }
}
