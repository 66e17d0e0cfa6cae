//! Matrix-free sensing operators `Φ` with a diagonal Gram matrix `ΦΦᵀ`.

use rand::seq::{index, SliceRandom};

use super::fwht::fwht_in_place;
use super::mask::MaskStack;
use crate::error::{check_len, Error, Result};
use crate::rng::{substream, Substream};
use crate::tensor::{GridShape, Measurement, SignalTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    PermutedHadamard,
    CodedAperture,
}

#[derive(Debug, Clone)]
enum Payload {
    Hadamard {
        /// `permuted[i] = x[permutation[i]]`
        permutation: Vec<usize>,
        /// Retained transform rows, ascending, always containing 0.
        rows: Vec<usize>,
        seed: u64,
    },
    Coded {
        stack: MaskStack,
        /// Frame masks as 0.0/1.0, frame-major.
        masks: Vec<f64>,
    },
}

/// A linear map `Φ: R^N → R^M` with `M ≤ N` and diagonal `ΦΦᵀ`.
///
/// Immutable after construction; `forward` and `adjoint` take `&self` and
/// can be called from several threads at once.
#[derive(Debug, Clone)]
pub struct SensingOperator {
    n_rows: usize,
    n_cols: usize,
    signal_shape: GridShape,
    gram_diag: Vec<f64>,
    payload: Payload,
}

impl SensingOperator {
    /// Seeded permuted-Hadamard operator over a signal of the given shape.
    ///
    /// Forward: permute coordinates, orthonormal FWHT, keep `m` rows. The DC
    /// row is always kept; the other `m - 1` rows are drawn uniformly.
    pub fn permuted_hadamard(shape: GridShape, m: usize, seed: u64) -> Result<Self> {
        let n = shape.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::invalid(format!(
                "Hadamard operator needs a power-of-two signal length, got {n}"
            )));
        }
        if m == 0 || m > n {
            return Err(Error::invalid(format!(
                "row count {m} must satisfy 0 < m <= n = {n}"
            )));
        }

        let mut permutation: Vec<usize> = (0..n).collect();
        permutation.shuffle(&mut substream(seed, Substream::Permutation));

        let mut rows: Vec<usize> = index::sample(&mut substream(seed, Substream::RowSelection), n - 1, m - 1)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        rows.push(0);
        rows.sort_unstable();

        Ok(Self {
            n_rows: m,
            n_cols: n,
            signal_shape: shape,
            gram_diag: vec![1.0; m],
            payload: Payload::Hadamard {
                permutation,
                rows,
                seed,
            },
        })
    }

    /// Coded-aperture operator: `y = Σ_f Φ^(f) ⊙ X^(f)` over a
    /// `rows × cols × frames` cube.
    pub fn coded_aperture(stack: MaskStack) -> Self {
        let (rows, cols, frames) = (stack.rows(), stack.cols(), stack.n_frames());
        let masks: Vec<f64> = stack.frames_flat().into_iter().map(f64::from).collect();
        let gram_diag = stack.coverage().into_iter().map(f64::from).collect();
        Self {
            n_rows: rows * cols,
            n_cols: rows * cols * frames,
            signal_shape: GridShape::Volume { rows, cols, frames },
            gram_diag,
            payload: Payload::Coded { stack, masks },
        }
    }

    pub fn kind(&self) -> OperatorKind {
        match self.payload {
            Payload::Hadamard { .. } => OperatorKind::PermutedHadamard,
            Payload::Coded { .. } => OperatorKind::CodedAperture,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn signal_shape(&self) -> GridShape {
        self.signal_shape
    }

    /// Diagonal of `ΦΦᵀ` (`r_1 .. r_M`).
    pub fn gram_diag(&self) -> &[f64] {
        &self.gram_diag
    }

    /// Compression ratio `M / N`.
    pub fn csr(&self) -> f64 {
        self.n_rows as f64 / self.n_cols as f64
    }

    pub fn seed(&self) -> Option<u64> {
        match self.payload {
            Payload::Hadamard { seed, .. } => Some(seed),
            Payload::Coded { .. } => None,
        }
    }

    pub fn mask_stack(&self) -> Option<&MaskStack> {
        match &self.payload {
            Payload::Coded { stack, .. } => Some(stack),
            Payload::Hadamard { .. } => None,
        }
    }

    /// Selected Hadamard rows (permuted-Hadamard operators only).
    pub fn selected_rows(&self) -> Option<&[usize]> {
        match &self.payload {
            Payload::Hadamard { rows, .. } => Some(rows),
            Payload::Coded { .. } => None,
        }
    }

    /// Coordinate permutation applied before the transform: `x_perm[i] = x[p[i]]`.
    pub fn permutation(&self) -> Option<&[usize]> {
        match &self.payload {
            Payload::Hadamard { permutation, .. } => Some(permutation),
            Payload::Coded { .. } => None,
        }
    }

    /// `Φx` on a raw slice of length `N`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n_cols, x.len())?;
        Ok(match &self.payload {
            Payload::Hadamard {
                permutation, rows, ..
            } => {
                let mut v: Vec<f64> = permutation.iter().map(|&p| x[p]).collect();
                fwht_in_place(&mut v)?;
                rows.iter().map(|&r| v[r]).collect()
            }
            Payload::Coded { masks, .. } => {
                let len = self.n_rows;
                let mut y = vec![0.0; len];
                for (frame, mask) in x.chunks_exact(len).zip(masks.chunks_exact(len)) {
                    for ((acc, &xv), &mv) in y.iter_mut().zip(frame).zip(mask) {
                        *acc += mv * xv;
                    }
                }
                y
            }
        })
    }

    /// `Φᵀy` on a raw slice of length `M`.
    pub fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n_rows, y.len())?;
        Ok(match &self.payload {
            Payload::Hadamard {
                permutation, rows, ..
            } => {
                let mut v = vec![0.0; self.n_cols];
                for (&r, &yv) in rows.iter().zip(y) {
                    v[r] = yv;
                }
                fwht_in_place(&mut v)?;
                let mut x = vec![0.0; self.n_cols];
                for (&p, &vv) in permutation.iter().zip(&v) {
                    x[p] = vv;
                }
                x
            }
            Payload::Coded { masks, .. } => masks
                .chunks_exact(self.n_rows)
                .flat_map(|mask| mask.iter().zip(y).map(|(m, v)| m * v))
                .collect(),
        })
    }

    pub fn forward(&self, x: &SignalTensor) -> Result<Measurement> {
        self.apply(x.data()).map(Measurement::new)
    }

    pub fn adjoint(&self, y: &Measurement) -> Result<SignalTensor> {
        let data = self.apply_adjoint(y.data())?;
        SignalTensor::new(data, self.signal_shape)
    }

    /// `Φᵀ diag(1/r) v`: the minimum-norm solution of `Φx = v`.
    pub fn pseudo_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n_rows, v.len())?;
        self.check_gram_invertible()?;
        let scaled: Vec<f64> = v.iter().zip(&self.gram_diag).map(|(a, r)| a / r).collect();
        self.apply_adjoint(&scaled)
    }

    pub(crate) fn check_gram_invertible(&self) -> Result<()> {
        match self.gram_diag.iter().position(|&r| r <= 0.0) {
            Some(index) => Err(Error::SingularGram {
                index,
                value: self.gram_diag[index],
            }),
            None => Ok(()),
        }
    }
}

/// Permuted Hadamard operator on a flat signal of length `n`.
pub fn make_permuted_hadamard(n: usize, m: usize, seed: u64) -> Result<SensingOperator> {
    SensingOperator::permuted_hadamard(GridShape::Line(n), m, seed)
}

pub fn make_coded_aperture(mask: MaskStack) -> SensingOperator {
    SensingOperator::coded_aperture(mask)
}

pub fn forward(op: &SensingOperator, x: &SignalTensor) -> Result<Measurement> {
    op.forward(x)
}

pub fn adjoint(op: &SensingOperator, y: &Measurement) -> Result<SignalTensor> {
    op.adjoint(y)
}

/// Number of rows for a target compression ratio, rounded to nearest (the DC row counts).
pub fn rows_for_csr(n: usize, csr: f64) -> Result<usize> {
    if !(csr > 0.0 && csr <= 1.0) {
        return Err(Error::invalid(format!("CSr {csr} outside (0, 1]")));
    }
    Ok(((csr * n as f64).round() as usize).clamp(1, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::mask::ShiftPattern;

    fn unit(m: usize, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        e
    }

    #[test]
    fn full_hadamard_is_orthogonal() {
        let op = make_permuted_hadamard(4, 4, 11).unwrap();
        let x = vec![0.5, -1.0, 2.0, 3.5];
        let back = op.apply_adjoint(&op.apply(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hadamard_keeps_dc_and_m_rows() {
        let op = make_permuted_hadamard(64, 10, 3).unwrap();
        let rows = op.selected_rows().unwrap();
        assert_eq!(rows.len(), 10);
        assert_eq!(rows[0], 0);
        assert!(rows.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(op.gram_diag(), &[1.0; 10]);
    }

    #[test]
    fn hadamard_gram_from_unit_vectors() {
        let op = make_permuted_hadamard(32, 20, 5).unwrap();
        for i in 0..20 {
            let g = op.apply(&op.apply_adjoint(&unit(20, i)).unwrap()).unwrap();
            for (j, v) in g.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hadamard_errors() {
        assert!(make_permuted_hadamard(12, 4, 0).is_err());
        assert!(make_permuted_hadamard(8, 9, 0).is_err());
        assert!(make_permuted_hadamard(8, 0, 0).is_err());
    }

    #[test]
    fn table_scale_hadamard_row_count() {
        let n = 256 * 256;
        let m = rows_for_csr(n, 0.3).unwrap();
        assert_eq!(m, 19661);
        let op = SensingOperator::permuted_hadamard(GridShape::Image { rows: 256, cols: 256 }, m, 0).unwrap();
        assert_eq!(op.n_rows(), 19661);
        assert!(op.gram_diag().iter().all(|&r| r == 1.0));
        assert_eq!(rows_for_csr(n, 0.1).unwrap(), 6554);
        assert_eq!(rows_for_csr(n, 1.0).unwrap(), n);
        assert!(rows_for_csr(n, 0.0).is_err());
        assert!(rows_for_csr(n, 1.5).is_err());
    }

    #[test]
    fn all_ones_mask_gram_is_frame_count() {
        let stack = MaskStack::new(3, 3, vec![1; 9], vec![(0, 0); 8]).unwrap();
        let op = make_coded_aperture(stack);
        assert_eq!(op.gram_diag(), &[8.0; 9]);
        assert_eq!(op.n_cols(), 72);
        assert!((op.csr() - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn single_frame_is_elementwise_mask() {
        let base = vec![1, 0, 0, 0, 1, 0, 0, 0, 1];
        let op = make_coded_aperture(MaskStack::new(3, 3, base.clone(), vec![(0, 0)]).unwrap());
        let x: Vec<f64> = (1..=9).map(f64::from).collect();
        let y = op.apply(&x).unwrap();
        for i in 0..9 {
            assert_eq!(y[i], f64::from(base[i]) * x[i]);
        }
    }

    #[test]
    fn identical_frames_sum_and_adjoint_stacks() {
        let op = make_coded_aperture(MaskStack::new(2, 2, vec![1; 4], vec![(0, 0); 2]).unwrap());
        let v = [1.0, -2.0, 3.0, 0.5];
        let x: Vec<f64> = v.iter().chain(v.iter()).copied().collect();
        assert_eq!(op.apply(&x).unwrap(), v.iter().map(|a| 2.0 * a).collect::<Vec<_>>());
        assert_eq!(op.apply_adjoint(&v).unwrap(), x);
    }

    #[test]
    fn coded_gram_from_unit_vectors() {
        let stack = MaskStack::random(5, 4, 3, 0.5, ShiftPattern::Vertical, 9).unwrap();
        let op = make_coded_aperture(stack);
        for i in 0..op.n_rows() {
            let g = op.apply(&op.apply_adjoint(&unit(op.n_rows(), i)).unwrap()).unwrap();
            assert!((g[i] - op.gram_diag()[i]).abs() < 1e-12);
            assert!(op.gram_diag()[i] == op.gram_diag()[i].round());
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let op = make_permuted_hadamard(8, 4, 0).unwrap();
        assert!(matches!(op.apply(&[0.0; 7]), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(op.apply_adjoint(&[0.0; 5]), Err(Error::ShapeMismatch { .. })));
    }
}
