//! Flat real-valued signals with grid metadata, and measurement vectors.
//!
//! Storage is row-major within a frame, frames outermost: element
//! `(r, c, f)` of a `rows × cols × frames` grid lives at
//! `f * rows * cols + r * cols + c`.

use crate::error::{Error, Result};

/// Grid dimensions of a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridShape {
    Line(usize),
    Image { rows: usize, cols: usize },
    Volume { rows: usize, cols: usize, frames: usize },
}

impl GridShape {
    pub fn len(&self) -> usize {
        match *self {
            GridShape::Line(n) => n,
            GridShape::Image { rows, cols } => rows * cols,
            GridShape::Volume { rows, cols, frames } => rows * cols * frames,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of axes the finite-difference operator acts on.
    pub fn n_axes(&self) -> usize {
        match self {
            GridShape::Line(_) => 1,
            GridShape::Image { .. } => 2,
            GridShape::Volume { .. } => 3,
        }
    }

    /// `(rows, cols, frames)` with degenerate axes set to 1. A line is a single row.
    pub fn dims3(&self) -> (usize, usize, usize) {
        match *self {
            GridShape::Line(n) => (1, n, 1),
            GridShape::Image { rows, cols } => (rows, cols, 1),
            GridShape::Volume { rows, cols, frames } => (rows, cols, frames),
        }
    }

    pub fn frames(&self) -> usize {
        self.dims3().2
    }

    pub fn frame_len(&self) -> usize {
        let (r, c, _) = self.dims3();
        r * c
    }
}

impl std::fmt::Display for GridShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridShape::Line(n) => write!(f, "{n}"),
            GridShape::Image { rows, cols } => write!(f, "{rows}x{cols}"),
            GridShape::Volume { rows, cols, frames } => write!(f, "{rows}x{cols}x{frames}"),
        }
    }
}

/// A signal `x` (image, video or spectral cube) stored as a flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTensor {
    data: Vec<f64>,
    shape: GridShape,
    /// Nominal `(lo, hi)` range of the data; `hi - lo` is the PSNR peak.
    pub value_range: (f64, f64),
}

impl SignalTensor {
    pub fn new(data: Vec<f64>, shape: GridShape) -> Result<Self> {
        if shape.len() != data.len() {
            return Err(Error::ShapeMismatch {
                expected: shape.len(),
                actual: data.len(),
            });
        }
        Ok(Self {
            data,
            shape,
            value_range: (0.0, 1.0),
        })
    }

    pub fn zeros(shape: GridShape) -> Self {
        Self {
            data: vec![0.0; shape.len()],
            shape,
            value_range: (0.0, 1.0),
        }
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.value_range = (lo, hi);
        self
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn peak(&self) -> f64 {
        self.value_range.1 - self.value_range.0
    }

    /// Borrow frame `f` (a `rows × cols` slab).
    pub fn frame(&self, f: usize) -> &[f64] {
        let len = self.shape.frame_len();
        &self.data[f * len..(f + 1) * len]
    }

    /// Copy of frame `f` as a standalone image tensor.
    pub fn frame_tensor(&self, f: usize) -> SignalTensor {
        let (rows, cols, _) = self.shape.dims3();
        SignalTensor {
            data: self.frame(f).to_vec(),
            shape: GridShape::Image { rows, cols },
            value_range: self.value_range,
        }
    }

    /// Same data, different shape of equal size.
    pub fn reshaped(self, shape: GridShape) -> Result<Self> {
        let range = self.value_range;
        Ok(Self::new(self.data, shape)?.with_range(range.0, range.1))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A measurement vector `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    data: Vec<f64>,
}

impl Measurement {
    pub fn new(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
