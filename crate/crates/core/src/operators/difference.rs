//! First-order forward differences with replicate (Neumann) boundaries.

use crate::error::{check_len, Result};
use crate::tensor::{GridShape, SignalTensor};

/// One grid axis in storage terms: lines of `len` samples spaced `stride` apart.
#[derive(Debug, Clone, Copy)]
struct Axis {
    len: usize,
    stride: usize,
}

/// Finite-difference operator `D` over a 1D, 2D or 3D grid.
///
/// `D x` stacks one block of `N` differences per axis: vertical, horizontal,
/// then temporal (axes absent from the shape are skipped). The difference at
/// the last index along an axis is zero.
#[derive(Debug, Clone)]
pub struct DifferenceOperator {
    shape: GridShape,
    alpha_bound: f64,
    axes: Vec<Axis>,
}

impl DifferenceOperator {
    pub fn new(shape: GridShape) -> Self {
        let (rows, cols, frames) = shape.dims3();
        let mut axes = Vec::with_capacity(3);
        if !matches!(shape, GridShape::Line(_)) {
            axes.push(Axis {
                len: rows,
                stride: cols,
            });
        }
        axes.push(Axis {
            len: cols,
            stride: 1,
        });
        if matches!(shape, GridShape::Volume { .. }) {
            axes.push(Axis {
                len: frames,
                stride: rows * cols,
            });
        }
        Self {
            shape,
            // each axis contributes at most 4 to the spectrum of DDᵀ
            alpha_bound: 4.0 * axes.len() as f64,
            axes,
        }
    }

    pub fn grid_shape(&self) -> GridShape {
        self.shape
    }

    /// Upper bound on the largest eigenvalue of `DDᵀ`.
    pub fn alpha_bound(&self) -> f64 {
        self.alpha_bound
    }

    pub fn n_axes(&self) -> usize {
        self.axes.len()
    }

    pub fn signal_len(&self) -> usize {
        self.shape.len()
    }

    /// Length of `D x`.
    pub fn output_len(&self) -> usize {
        self.shape.len() * self.axes.len()
    }

    /// `out = D x`. `out` must have length `output_len()`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.signal_len();
        check_len(n, x.len())?;
        check_len(self.output_len(), out.len())?;
        for (axis, block) in self.axes.iter().zip(out.chunks_exact_mut(n)) {
            let line = axis.len * axis.stride;
            for (xs, ds) in x.chunks_exact(line).zip(block.chunks_exact_mut(line)) {
                let body = (axis.len - 1) * axis.stride;
                let (head, tail) = ds.split_at_mut(body);
                for ((d, a), b) in head.iter_mut().zip(&xs[..body]).zip(&xs[axis.stride..]) {
                    *d = b - a;
                }
                tail.fill(0.0);
            }
        }
        Ok(())
    }

    /// `out = Dᵀ z`. `z` must have length `output_len()`.
    pub fn adjoint_into(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.signal_len();
        check_len(self.output_len(), z.len())?;
        check_len(n, out.len())?;
        out.fill(0.0);
        for (axis, block) in self.axes.iter().zip(z.chunks_exact(n)) {
            let line = axis.len * axis.stride;
            let body = (axis.len - 1) * axis.stride;
            for (zs, os) in block.chunks_exact(line).zip(out.chunks_exact_mut(line)) {
                // -z[k] on every interior sample, +z[k-1] shifted one step along the axis
                for (o, zv) in os[..body].iter_mut().zip(&zs[..body]) {
                    *o -= zv;
                }
                for (o, zv) in os[axis.stride..].iter_mut().zip(&zs[..body]) {
                    *o += zv;
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_len()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    pub fn adjoint(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.signal_len()];
        self.adjoint_into(z, &mut out)?;
        Ok(out)
    }
}

pub fn diff_forward(d: &DifferenceOperator, x: &SignalTensor) -> Result<Vec<f64>> {
    check_len(d.signal_len(), x.len())?;
    d.apply(x.data())
}

pub fn diff_adjoint(d: &DifferenceOperator, z: &[f64]) -> Result<SignalTensor> {
    SignalTensor::new(d.adjoint(z)?, d.grid_shape())
}

/// Anisotropic total variation `‖D x‖₁`.
pub fn tv_norm(d: &DifferenceOperator, x: &SignalTensor) -> Result<f64> {
    Ok(diff_forward(d, x)?.iter().map(|v| v.abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_differences() {
        let d = DifferenceOperator::new(GridShape::Line(3));
        assert_eq!(d.apply(&[0.0, 1.0, 3.0]).unwrap(), vec![1.0, 2.0, 0.0]);
        let x = SignalTensor::new(vec![0.0, 1.0, 3.0], GridShape::Line(3)).unwrap();
        assert_eq!(tv_norm(&d, &x).unwrap(), 3.0);
    }

    #[test]
    fn constant_is_annihilated() {
        for shape in [
            GridShape::Line(7),
            GridShape::Image { rows: 4, cols: 5 },
            GridShape::Volume { rows: 3, cols: 4, frames: 2 },
        ] {
            let d = DifferenceOperator::new(shape);
            let x = vec![2.5; shape.len()];
            let dx = d.apply(&x).unwrap();
            assert!(dx.iter().all(|&v| v == 0.0));
            assert!(d.adjoint(&dx).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn image_axes_layout() {
        // 2x3 image, rows [1 2 4] / [0 0 7]
        let d = DifferenceOperator::new(GridShape::Image { rows: 2, cols: 3 });
        let dx = d.apply(&[1.0, 2.0, 4.0, 0.0, 0.0, 7.0]).unwrap();
        assert_eq!(&dx[..6], &[-1.0, -2.0, 3.0, 0.0, 0.0, 0.0]);
        assert_eq!(&dx[6..], &[1.0, 2.0, 0.0, 0.0, 7.0, 0.0]);
    }

    #[test]
    fn temporal_axis() {
        let d = DifferenceOperator::new(GridShape::Volume { rows: 1, cols: 2, frames: 3 });
        let dx = d.apply(&[0.0, 1.0, 1.0, 1.0, 3.0, 1.0]).unwrap();
        assert_eq!(&dx[12..], &[1.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.alpha_bound(), 12.0);
    }

    #[test]
    fn alpha_defaults() {
        assert_eq!(DifferenceOperator::new(GridShape::Image { rows: 2, cols: 2 }).alpha_bound(), 8.0);
        assert_eq!(DifferenceOperator::new(GridShape::Line(2)).alpha_bound(), 4.0);
    }

    #[test]
    fn zero_dual_gives_zero() {
        let d = DifferenceOperator::new(GridShape::Image { rows: 3, cols: 3 });
        assert!(d.adjoint(&[0.0; 18]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn length_checks() {
        let d = DifferenceOperator::new(GridShape::Image { rows: 3, cols: 3 });
        assert!(d.apply(&[0.0; 8]).is_err());
        assert!(d.adjoint(&[0.0; 9]).is_err());
    }
}
