//! Shifting binary masks for coded-aperture (CACTI / CASSI) sensing.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{substream, Substream};

/// Direction in which successive frames see the physical mask shifted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftPattern {
    /// One pixel down per frame, `(f, 0)`. Temporal (CACTI) default.
    Vertical,
    /// One pixel right per band, `(0, f)`. Spectral (CASSI) dispersion.
    Horizontal,
}

impl ShiftPattern {
    pub fn shifts(self, frames: usize) -> Vec<(isize, isize)> {
        (0..frames as isize)
            .map(|f| match self {
                ShiftPattern::Vertical => (f, 0),
                ShiftPattern::Horizontal => (0, f),
            })
            .collect()
    }
}

/// A base binary mask and the per-frame translations applied to it.
///
/// Frame `f` sees the base mask translated by `shifts[f] = (dy, dx)`;
/// positions that fall outside the base mask read as 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskStack {
    rows: usize,
    cols: usize,
    base: Vec<u8>,
    shifts: Vec<(isize, isize)>,
}

impl MaskStack {
    pub fn new(rows: usize, cols: usize, base: Vec<u8>, shifts: Vec<(isize, isize)>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("mask dimensions must be positive"));
        }
        if shifts.is_empty() {
            return Err(Error::invalid("mask stack needs at least one frame"));
        }
        if base.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: rows * cols,
                actual: base.len(),
            });
        }
        if base.iter().any(|&b| b > 1) {
            return Err(Error::invalid("mask entries must be 0 or 1"));
        }
        Ok(Self {
            rows,
            cols,
            base,
            shifts,
        })
    }

    /// Bernoulli(`density`) base mask drawn from the mask substream of `seed`.
    ///
    /// After drawing, any pixel that no frame would expose is switched on in
    /// the base mask, so every Gram diagonal entry is at least 1.
    pub fn random(
        rows: usize,
        cols: usize,
        frames: usize,
        density: f64,
        pattern: ShiftPattern,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::invalid(format!("mask density {density} outside [0, 1]")));
        }
        let mut rng = substream(seed, Substream::Mask);
        let base = (0..rows * cols)
            .map(|_| u8::from(rng.random_bool(density)))
            .collect();
        let mut stack = Self::new(rows, cols, base, pattern.shifts(frames))?;
        stack.ensure_coverage();
        Ok(stack)
    }

    fn ensure_coverage(&mut self) {
        let coverage = self.coverage();
        for (i, &c) in coverage.iter().enumerate() {
            if c == 0 {
                // frame 0 is unshifted for both built-in patterns
                if let Some(src) = self.source_index(0, i / self.cols, i % self.cols) {
                    self.base[src] = 1;
                }
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_frames(&self) -> usize {
        self.shifts.len()
    }

    pub fn base(&self) -> &[u8] {
        &self.base
    }

    pub fn shifts(&self) -> &[(isize, isize)] {
        &self.shifts
    }

    /// Base-mask index seen by pixel `(r, c)` of frame `f`, if in bounds.
    fn source_index(&self, f: usize, r: usize, c: usize) -> Option<usize> {
        let (dy, dx) = self.shifts[f];
        let sr = r as isize - dy;
        let sc = c as isize - dx;
        if sr < 0 || sc < 0 || sr >= self.rows as isize || sc >= self.cols as isize {
            None
        } else {
            Some(sr as usize * self.cols + sc as usize)
        }
    }

    /// Mask of frame `f`, row-major `rows × cols`.
    pub fn frame_mask(&self, f: usize) -> Vec<u8> {
        let mut out = vec![0u8; self.rows * self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                if let Some(src) = self.source_index(f, r, c) {
                    out[r * self.cols + c] = self.base[src];
                }
            }
        }
        out
    }

    /// All frame masks concatenated, frame-major.
    pub fn frames_flat(&self) -> Vec<u8> {
        (0..self.n_frames()).flat_map(|f| self.frame_mask(f)).collect()
    }

    /// Number of frames exposing each pixel.
    pub fn coverage(&self) -> Vec<u32> {
        let mut cov = vec![0u32; self.rows * self.cols];
        for f in 0..self.n_frames() {
            for (c, m) in cov.iter_mut().zip(self.frame_mask(f)) {
                *c += u32::from(m);
            }
        }
        cov
    }
}
