//! Operator construction from a reproducible description, and the
//! simulate / baseline steps shared by the CLI and the benchmark runner.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{read_mask, KeyValues};
use crate::operators::{rows_for_csr, MaskStack, SensingOperator, ShiftPattern};
use crate::tensor::{GridShape, Measurement, SignalTensor};

pub const DEFAULT_MASK_DENSITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorFamily {
    Hadamard,
    Cacti,
    Cassi,
}

impl OperatorFamily {
    pub fn name(self) -> &'static str {
        match self {
            OperatorFamily::Hadamard => "hadamard",
            OperatorFamily::Cacti => "cacti",
            OperatorFamily::Cassi => "cassi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hadamard" => Ok(OperatorFamily::Hadamard),
            "cacti" => Ok(OperatorFamily::Cacti),
            "cassi" => Ok(OperatorFamily::Cassi),
            other => Err(Error::invalid(format!("unknown operator '{other}'"))),
        }
    }

    pub fn shift_pattern(self) -> ShiftPattern {
        match self {
            OperatorFamily::Cassi => ShiftPattern::Horizontal,
            _ => ShiftPattern::Vertical,
        }
    }
}

/// Everything needed to rebuild a sensing operator bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub family: OperatorFamily,
    pub seed: u64,
    /// Target compression ratio (Hadamard only).
    pub csr: f64,
    /// Bernoulli density of generated masks.
    pub mask_density: f64,
    /// External mask, used instead of a generated one.
    pub mask_file: Option<PathBuf>,
}

impl OperatorSpec {
    pub fn hadamard(csr: f64, seed: u64) -> Self {
        Self {
            family: OperatorFamily::Hadamard,
            seed,
            csr,
            mask_density: DEFAULT_MASK_DENSITY,
            mask_file: None,
        }
    }

    pub fn coded(family: OperatorFamily, seed: u64) -> Self {
        Self {
            family,
            seed,
            csr: 1.0,
            mask_density: DEFAULT_MASK_DENSITY,
            mask_file: None,
        }
    }

    pub fn build(&self, shape: GridShape) -> Result<SensingOperator> {
        match self.family {
            OperatorFamily::Hadamard => {
                let m = rows_for_csr(shape.len(), self.csr)?;
                SensingOperator::permuted_hadamard(shape, m, self.seed)
            }
            OperatorFamily::Cacti | OperatorFamily::Cassi => {
                let GridShape::Volume { rows, cols, frames } = shape else {
                    return Err(Error::invalid(format!(
                        "{} needs a rows x cols x frames cube, got {shape}",
                        self.family.name()
                    )));
                };
                let pattern = self.family.shift_pattern();
                let stack = match &self.mask_file {
                    Some(path) => read_mask(path, frames, pattern)?,
                    None => MaskStack::random(rows, cols, frames, self.mask_density, pattern, self.seed)?,
                };
                if (stack.rows(), stack.cols(), stack.n_frames()) != (rows, cols, frames) {
                    return Err(Error::invalid(format!(
                        "mask is {}x{}x{}, signal is {shape}",
                        stack.rows(),
                        stack.cols(),
                        stack.n_frames()
                    )));
                }
                Ok(SensingOperator::coded_aperture(stack))
            }
        }
    }
}

/// Operator description written next to a simulated measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub operator: OperatorSpec,
    pub shape: GridShape,
    pub n_rows: usize,
    pub value_range: (f64, f64),
    pub truth: Option<PathBuf>,
    pub measurement: Option<PathBuf>,
}

impl Descriptor {
    pub fn to_key_values(&self) -> KeyValues {
        let (rows, cols, frames) = self.shape.dims3();
        let mut kv = KeyValues::new();
        kv.set("format_version", 1);
        kv.set("operator", self.operator.family.name());
        kv.set("rows", rows);
        kv.set("cols", cols);
        kv.set("frames", frames);
        kv.set("n", self.shape.len());
        kv.set("m", self.n_rows);
        kv.set("seed", self.operator.seed);
        kv.set("csr", self.operator.csr);
        kv.set("mask_density", self.operator.mask_density);
        if let Some(p) = &self.operator.mask_file {
            kv.set("mask_file", p.display());
        }
        kv.set("value_lo", self.value_range.0);
        kv.set("value_hi", self.value_range.1);
        if let Some(p) = &self.truth {
            kv.set("truth", p.display());
        }
        if let Some(p) = &self.measurement {
            kv.set("measurement", p.display());
        }
        kv
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let family = OperatorFamily::parse(kv.require("operator")?)?;
        let rows: usize = kv.require_parsed("rows")?;
        let cols: usize = kv.require_parsed("cols")?;
        let frames: usize = kv.parsed("frames")?.unwrap_or(1);
        let shape = if frames > 1 {
            GridShape::Volume { rows, cols, frames }
        } else {
            GridShape::Image { rows, cols }
        };
        Ok(Self {
            operator: OperatorSpec {
                family,
                seed: kv.require_parsed("seed")?,
                csr: kv.parsed("csr")?.unwrap_or(1.0),
                mask_density: kv.parsed("mask_density")?.unwrap_or(DEFAULT_MASK_DENSITY),
                mask_file: kv.get("mask_file").map(PathBuf::from),
            },
            shape,
            n_rows: kv.require_parsed("m")?,
            value_range: (
                kv.parsed("value_lo")?.unwrap_or(0.0),
                kv.parsed("value_hi")?.unwrap_or(1.0),
            ),
            truth: kv.get("truth").map(PathBuf::from),
            measurement: kv.get("measurement").map(PathBuf::from),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_key_values(&KeyValues::read(path)?)
    }

    /// Rebuilds the operator and checks it against the recorded row count.
    pub fn build_operator(&self) -> Result<SensingOperator> {
        let op = self.operator.build(self.shape)?;
        if op.n_rows() != self.n_rows {
            return Err(Error::invalid(format!(
                "descriptor records m = {} but the operator has {} rows",
                self.n_rows,
                op.n_rows()
            )));
        }
        Ok(op)
    }
}

/// Noiseless snapshot `y = Φ x`.
pub fn simulate_snapshot(truth: &SignalTensor, op: &SensingOperator) -> Result<Measurement> {
    op.forward(truth)
}

/// `Φᵀ diag(1/r) y`, the starting point of every solver and the
/// reference for how much reconstruction adds.
pub fn adjoint_baseline(op: &SensingOperator, y: &Measurement) -> Result<SignalTensor> {
    SignalTensor::new(op.pseudo_inverse(y.data())?, op.signal_shape())
}
