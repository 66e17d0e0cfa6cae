//! PSNR-vs-CSr benchmark runner.
//!
//! Cells are `(input, csr, algorithm, seed)` for 2D images and
//! `(input, algorithm, seed)` for cubes, whose ratio is fixed at `1/frames`.
//! Cells run on a bounded pool of worker threads; rows are written to the
//! CSV by a single writer in cell order, so the file is reproducible apart
//! from the timing column.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use log::{info, warn};

use super::metrics::{per_frame_psnr, psnr, Psnr};
use super::pipeline::{simulate_snapshot, OperatorFamily, OperatorSpec};
use super::synthetic::{gaussian_blob_cube, moving_rectangle_video};
use crate::error::{Error, Result};
use crate::io::{is_raw_cube, read_cube, read_image_resized, KeyValues};
use crate::operators::DifferenceOperator;
use crate::solvers::{reconstruct, AccelVariant, Algorithm, SolverConfig};
use crate::tensor::SignalTensor;

pub const CSV_HEADER: &str = "image_id,algorithm,csr,seed,frame,psnr_db,wall_time_s,iterations";

/// Compression ratios of the 2D image table.
pub const TABLE_CSR: [f64; 11] = [0.02, 0.04, 0.05, 0.06, 0.07, 0.08, 0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    File(PathBuf),
    /// Built-in moving-rectangle video (coded aperture, vertical shifts).
    SyntheticVideo,
    /// Built-in Gaussian-blob spectral cube (coded aperture, horizontal shifts).
    SyntheticSpectral,
}

impl InputSource {
    pub fn parse(s: &str) -> Self {
        match s.trim() {
            "synthetic:video" => InputSource::SyntheticVideo,
            "synthetic:spectral" => InputSource::SyntheticSpectral,
            other => InputSource::File(PathBuf::from(other)),
        }
    }

    pub fn id(&self) -> String {
        match self {
            InputSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().replace(',', "_"))
                .unwrap_or_else(|| "input".into()),
            InputSource::SyntheticVideo => "synthetic-video".into(),
            InputSource::SyntheticSpectral => "synthetic-spectral".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub inputs: Vec<InputSource>,
    pub csr_list: Vec<f64>,
    pub algorithms: Vec<SolverConfig>,
    pub seeds: Vec<u64>,
    pub output_path: PathBuf,
    /// 2D images are resampled to `image_size × image_size`.
    pub image_size: u32,
    /// Frame count and side length of the built-in cubes.
    pub synthetic_frames: usize,
    pub synthetic_size: usize,
    pub mask_density: f64,
    pub workers: usize,
}

impl BenchmarkSpec {
    pub fn new(inputs: Vec<InputSource>, output_path: PathBuf) -> Self {
        Self {
            inputs,
            csr_list: TABLE_CSR.to_vec(),
            algorithms: Algorithm::ALL.iter().map(|&a| SolverConfig::new(a)).collect(),
            seeds: vec![0],
            output_path,
            image_size: 256,
            synthetic_frames: 8,
            synthetic_size: 64,
            mask_density: super::pipeline::DEFAULT_MASK_DENSITY,
            workers: thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }

    /// Parses a `key=value` spec. Relative input paths resolve against `base_dir`.
    ///
    /// Keys: `inputs`, `csr`, `algorithms`, `seeds`, `output`, `image_size`,
    /// `frames`, `synthetic_size`, `mask_density`, `workers`, and the solver
    /// settings `lambda`, `eta`, `delta`, `accel`, `iters`, `inner_iters`,
    /// `tolerance` shared by every algorithm.
    pub fn from_key_values(kv: &KeyValues, base_dir: &Path) -> Result<Self> {
        let inputs = kv
            .list("inputs")
            .iter()
            .map(|s| match InputSource::parse(s) {
                InputSource::File(p) if p.is_relative() => InputSource::File(base_dir.join(p)),
                other => other,
            })
            .collect();
        let output = kv.get("output").map(PathBuf::from).unwrap_or_else(|| "benchmark.csv".into());
        let mut spec = Self::new(inputs, output);

        if kv.get("csr").is_some() {
            spec.csr_list = kv
                .list("csr")
                .iter()
                .map(|s| s.parse().map_err(|_| Error::invalid(format!("bad csr '{s}'"))))
                .collect::<Result<_>>()?;
        }
        if kv.get("seeds").is_some() {
            spec.seeds = kv
                .list("seeds")
                .iter()
                .map(|s| s.parse().map_err(|_| Error::invalid(format!("bad seed '{s}'"))))
                .collect::<Result<_>>()?;
        }

        let mut base = SolverConfig::default();
        if let Some(v) = kv.parsed("lambda")? {
            base.lambda = v;
        }
        if let Some(v) = kv.parsed("eta")? {
            base.eta = v;
        }
        if let Some(v) = kv.parsed("delta")? {
            base.delta = v;
        }
        if let Some(v) = kv.get("accel") {
            base.accel_variant = v.parse::<AccelVariant>()?;
        }
        if let Some(v) = kv.parsed("iters")? {
            base.max_outer_iters = v;
        }
        if let Some(v) = kv.parsed("inner_iters")? {
            base.inner_denoise_iters = v;
        }
        if let Some(v) = kv.parsed("tolerance")? {
            base.tolerance = v;
        }
        let names = if kv.get("algorithms").is_some() {
            kv.list("algorithms")
        } else {
            Algorithm::ALL.iter().map(|a| a.name().to_string()).collect()
        };
        spec.algorithms = names
            .iter()
            .map(|n| {
                Ok(SolverConfig {
                    algorithm: n.parse()?,
                    ..base.clone()
                })
            })
            .collect::<Result<_>>()?;

        if let Some(v) = kv.parsed("image_size")? {
            spec.image_size = v;
        }
        if let Some(v) = kv.parsed("frames")? {
            spec.synthetic_frames = v;
        }
        if let Some(v) = kv.parsed("synthetic_size")? {
            spec.synthetic_size = v;
        }
        if let Some(v) = kv.parsed("mask_density")? {
            spec.mask_density = v;
        }
        if let Some(v) = kv.parsed("workers")? {
            spec.workers = v;
        }
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let kv = KeyValues::read(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_key_values(&kv, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(Error::invalid("benchmark spec lists no inputs"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("benchmark spec lists no algorithms"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("benchmark spec lists no seeds"));
        }
        if self.csr_list.is_empty() {
            return Err(Error::invalid("benchmark spec lists no compression ratios"));
        }
        if let Some(bad) = self.csr_list.iter().find(|&&c| !(c > 0.0 && c <= 1.0)) {
            return Err(Error::invalid(format!("CSr {bad} outside (0, 1]")));
        }
        if self.image_size == 0 || !(self.image_size as usize).pow(2).is_power_of_two() {
            return Err(Error::invalid(format!(
                "image_size {} must be a power of two",
                self.image_size
            )));
        }
        if self.synthetic_frames == 0 || self.synthetic_size == 0 {
            return Err(Error::invalid("synthetic cube dimensions must be positive"));
        }
        for cfg in &self.algorithms {
            cfg.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub image_id: String,
    pub algorithm: String,
    pub csr: f64,
    pub seed: u64,
    /// `-1` for whole-signal rows, the frame index otherwise.
    pub frame: i64,
    /// `+inf` on exact match, NaN on a failed cell.
    pub psnr_db: f64,
    pub exact_match: bool,
    pub wall_time_s: f64,
    pub iterations: usize,
    pub error: Option<String>,
}

impl BenchmarkRow {
    pub fn is_failure(&self) -> bool {
        self.error.is_some()
    }

    /// CSV line without the trailing newline.
    pub fn to_csv(&self) -> String {
        let psnr = if self.psnr_db.is_nan() {
            "nan".to_string()
        } else if self.psnr_db.is_infinite() {
            "inf".to_string()
        } else {
            format!("{:.4}", self.psnr_db)
        };
        format!(
            "{},{},{},{},{},{},{:.3},{}",
            self.image_id, self.algorithm, self.csr, self.seed, self.frame, psnr, self.wall_time_s, self.iterations
        )
    }
}

struct Cell {
    input: usize,
    csr: Option<f64>,
    config: usize,
    seed: u64,
}

enum Loaded {
    Image(SignalTensor),
    Cube(SignalTensor, OperatorFamily),
    Failed(String),
}

fn load_input(src: &InputSource, spec: &BenchmarkSpec) -> Loaded {
    let n = spec.synthetic_size;
    let result = match src {
        InputSource::SyntheticVideo => {
            return Loaded::Cube(moving_rectangle_video(n, n, spec.synthetic_frames), OperatorFamily::Cacti)
        }
        InputSource::SyntheticSpectral => {
            return Loaded::Cube(gaussian_blob_cube(n, n, spec.synthetic_frames), OperatorFamily::Cassi)
        }
        InputSource::File(p) if is_raw_cube(p) => read_cube(p).map(|c| {
            if c.shape().frames() > 1 {
                Loaded::Cube(c, OperatorFamily::Cacti)
            } else {
                Loaded::Image(c)
            }
        }),
        InputSource::File(p) => read_image_resized(p, Some(spec.image_size)).map(Loaded::Image),
    };
    result.unwrap_or_else(|e| Loaded::Failed(e.to_string()))
}

fn failed_row(id: &str, cfg: &SolverConfig, csr: f64, seed: u64, message: String) -> BenchmarkRow {
    BenchmarkRow {
        image_id: id.to_string(),
        algorithm: cfg.algorithm.name().to_string(),
        csr,
        seed,
        frame: -1,
        psnr_db: f64::NAN,
        exact_match: false,
        wall_time_s: 0.0,
        iterations: 0,
        error: Some(message),
    }
}

fn run_cell(spec: &BenchmarkSpec, inputs: &[(String, Loaded)], cell: &Cell) -> Vec<BenchmarkRow> {
    let (id, loaded) = &inputs[cell.input];
    let base_cfg = &spec.algorithms[cell.config];
    let nominal_csr = cell.csr.unwrap_or(f64::NAN);
    let (truth, op_spec) = match loaded {
        Loaded::Failed(msg) => return vec![failed_row(id, base_cfg, nominal_csr, cell.seed, msg.clone())],
        Loaded::Image(t) => (t, OperatorSpec::hadamard(nominal_csr, cell.seed)),
        Loaded::Cube(t, family) => {
            let mut s = OperatorSpec::coded(*family, cell.seed);
            s.mask_density = spec.mask_density;
            (t, s)
        }
    };
    let cfg = SolverConfig {
        data_range: truth.peak(),
        ..base_cfg.clone()
    };

    let outcome = (|| -> Result<Vec<BenchmarkRow>> {
        let op = op_spec.build(truth.shape())?;
        let csr = cell.csr.unwrap_or_else(|| op.csr());
        let y = simulate_snapshot(truth, &op)?;
        let d = DifferenceOperator::new(truth.shape());
        let result = reconstruct(&op, &y, &d, &cfg)?;
        let (lo, _) = truth.value_range;
        // the solver works on the raw signal; PSNR is measured against the truth's own range
        let estimate = result.x_hat.clone().with_range(lo, lo + truth.peak());
        let row = |frame: i64, p: Psnr| BenchmarkRow {
            image_id: id.clone(),
            algorithm: cfg.algorithm.name().to_string(),
            csr,
            seed: cell.seed,
            frame,
            psnr_db: p.db,
            exact_match: p.exact_match,
            wall_time_s: result.wall_time,
            iterations: result.outer_iters_used,
            error: None,
        };
        let mut rows = vec![row(-1, psnr(truth, &estimate, truth.peak())?)];
        if truth.shape().frames() > 1 {
            for (f, p) in per_frame_psnr(truth, &estimate, truth.peak())?.into_iter().enumerate() {
                rows.push(row(f as i64, p));
            }
        }
        Ok(rows)
    })();

    outcome.unwrap_or_else(|e| vec![failed_row(id, &cfg, nominal_csr, cell.seed, e.to_string())])
}

/// Runs every cell of `spec`, streaming rows to `spec.output_path`.
///
/// Unreadable inputs and solver failures become flagged rows (NaN PSNR) and
/// the run continues. Errors are returned only for an invalid spec or an
/// unwritable output file.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<Vec<BenchmarkRow>> {
    spec.validate()?;
    let file = File::create(&spec.output_path).map_err(|e| Error::io(&spec.output_path, e))?;
    let mut out = BufWriter::new(file);
    let write_err = |e| Error::io(&spec.output_path, e);
    writeln!(out, "{CSV_HEADER}").map_err(write_err)?;

    let inputs: Vec<(String, Loaded)> = spec
        .inputs
        .iter()
        .map(|src| (src.id(), load_input(src, spec)))
        .collect();

    let mut cells = Vec::new();
    for (i, (_, loaded)) in inputs.iter().enumerate() {
        let csrs: Vec<Option<f64>> = match loaded {
            Loaded::Cube(..) => vec![None],
            _ => spec.csr_list.iter().copied().map(Some).collect(),
        };
        for csr in csrs {
            for config in 0..spec.algorithms.len() {
                for &seed in &spec.seeds {
                    cells.push(Cell {
                        input: i,
                        csr,
                        config,
                        seed,
                    });
                }
            }
        }
    }
    info!("benchmark: {} cells on {} worker(s)", cells.len(), spec.workers.max(1));

    let next = Arc::new(AtomicUsize::new(0));
    let (tx, rx) = mpsc::channel::<(usize, Vec<BenchmarkRow>)>();
    let mut all_rows = Vec::new();

    thread::scope(|scope| -> Result<()> {
        for _ in 0..spec.workers.max(1).min(cells.len()) {
            let tx = tx.clone();
            let next = Arc::clone(&next);
            let (cells, inputs) = (&cells, &inputs);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                if tx.send((i, run_cell(spec, inputs, &cells[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // reorder buffer: emit rows strictly in cell order
        let mut pending = BTreeMap::new();
        let mut emitted = 0;
        for (i, rows) in rx {
            pending.insert(i, rows);
            while let Some(rows) = pending.remove(&emitted) {
                for row in &rows {
                    if let Some(msg) = &row.error {
                        warn!("{} {} csr={}: {msg}", row.image_id, row.algorithm, row.csr);
                    }
                    writeln!(out, "{}", row.to_csv()).map_err(write_err)?;
                }
                out.flush().map_err(write_err)?;
                all_rows.extend(rows);
                emitted += 1;
            }
        }
        Ok(())
    })?;

    Ok(all_rows)
}

/// Mean PSNR over seeds for each `(image, algorithm, csr)` of the whole-signal rows.
/// Failed rows are skipped.
pub fn mean_psnr_by_cell(rows: &[BenchmarkRow]) -> BTreeMap<(String, String, String), f64> {
    let mut acc: BTreeMap<(String, String, String), (f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.frame == -1 && !r.is_failure()) {
        let e = acc
            .entry((r.image_id.clone(), r.algorithm.clone(), format!("{}", r.csr)))
            .or_default();
        e.0 += r.psnr_db;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}
