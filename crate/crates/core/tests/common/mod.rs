//! Dense-matrix and exact 1D TV oracles shared by the integration tests.

#![allow(dead_code)]

use gaptv::{GridShape, MaskStack, SensingOperator};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Box-Muller; the tests only need a spread of signs and magnitudes
    (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(1e-12..1.0);
            let v: f64 = rng.random();
            (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
        })
        .collect()
}

/// Orthonormal Sylvester-ordered Hadamard matrix of order `n`.
pub fn sylvester(n: usize) -> DMatrix<f64> {
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |i, j| if (i & j).count_ones() % 2 == 0 { s } else { -s })
}

/// `Φ = S H P` assembled from the operator's permutation and row list.
pub fn dense_hadamard(op: &SensingOperator) -> DMatrix<f64> {
    let n = op.n_cols();
    let h = sylvester(n);
    let perm = op.permutation().unwrap();
    let rows = op.selected_rows().unwrap();
    let mut p = DMatrix::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        p[(i, j)] = 1.0;
    }
    let mut s = DMatrix::zeros(rows.len(), n);
    for (k, &r) in rows.iter().enumerate() {
        s[(k, r)] = 1.0;
    }
    s * h * p
}

/// `[diag(m₀) … diag(m_{T−1})]` with each frame mask rebuilt from the base
/// mask and its shift.
pub fn dense_coded(stack: &MaskStack) -> DMatrix<f64> {
    let (rows, cols, frames) = (stack.rows(), stack.cols(), stack.n_frames());
    let l = rows * cols;
    let mut phi = DMatrix::zeros(l, l * frames);
    for (f, &(dy, dx)) in stack.shifts().iter().enumerate() {
        for r in 0..rows {
            for c in 0..cols {
                let (sr, sc) = (r as isize - dy, c as isize - dx);
                if sr >= 0 && sc >= 0 && (sr as usize) < rows && (sc as usize) < cols {
                    let on = stack.base()[sr as usize * cols + sc as usize];
                    phi[(r * cols + c, f * l + r * cols + c)] = f64::from(on);
                }
            }
        }
    }
    phi
}

pub fn dense_operator(op: &SensingOperator) -> DMatrix<f64> {
    match op.mask_stack() {
        Some(stack) => dense_coded(stack),
        None => dense_hadamard(op),
    }
}

/// Explicit forward-difference matrix with the zero last difference per axis.
pub fn dense_difference(shape: GridShape) -> DMatrix<f64> {
    let (rows, cols, frames) = shape.dims3();
    let n = shape.len();
    let idx = |r: usize, c: usize, f: usize| f * rows * cols + r * cols + c;
    let mut axes: Vec<(usize, usize, usize)> = Vec::new();
    if !matches!(shape, GridShape::Line(_)) {
        axes.push((1, 0, 0));
    }
    axes.push((0, 1, 0));
    if matches!(shape, GridShape::Volume { .. }) {
        axes.push((0, 0, 1));
    }
    let mut d = DMatrix::zeros(n * axes.len(), n);
    for (a, &(dr, dc, df)) in axes.iter().enumerate() {
        for f in 0..frames {
            for r in 0..rows {
                for c in 0..cols {
                    let (r2, c2, f2) = (r + dr, c + dc, f + df);
                    if r2 < rows && c2 < cols && f2 < frames {
                        let row = a * n + idx(r, c, f);
                        d[(row, idx(r, c, f))] = -1.0;
                        d[(row, idx(r2, c2, f2))] = 1.0;
                    }
                }
            }
        }
    }
    d
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `θ + Φᵀ(ΦΦᵀ)⁻¹(y − Φθ)` with a general matrix inverse.
pub fn dense_projection(phi: &DMatrix<f64>, theta: &[f64], y: &[f64]) -> Vec<f64> {
    let theta = dvec(theta);
    let gram_inv = (phi * phi.transpose()).try_inverse().expect("singular Gram");
    let x = &theta + phi.transpose() * gram_inv * (dvec(y) - phi * &theta);
    x.as_slice().to_vec()
}

/// Solves `(ΦᵀΦ + ηI) x = Φᵀy + ηθ` by LU.
pub fn dense_admm(phi: &DMatrix<f64>, theta: &[f64], y: &[f64], eta: f64) -> Vec<f64> {
    let n = phi.ncols();
    let lhs = phi.transpose() * phi + DMatrix::identity(n, n) * eta;
    let rhs = phi.transpose() * dvec(y) + dvec(theta) * eta;
    lhs.lu().solve(&rhs).expect("singular system").as_slice().to_vec()
}

/// Exact minimizer of `½‖y − x‖² + μ Σ|x_{k+1} − x_k|` (Condat's direct algorithm).
pub fn condat_tv1d(y: &[f64], mu: f64) -> Vec<f64> {
    let n = y.len();
    let mut x = vec![0.0; n];
    if n == 0 {
        return x;
    }
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut vmin = y[0] - mu;
    let mut vmax = y[0] + mu;
    let mut umin = mu;
    let mut umax = -mu;
    loop {
        while k == n - 1 {
            if umin < 0.0 {
                x[k0..=kminus].fill(vmin);
                kminus += 1;
                k = kminus;
                k0 = kminus;
                if k >= n {
                    return x;
                }
                vmin = y[k];
                umin = mu;
                umax = y[k] + mu - vmax;
            } else if umax > 0.0 {
                x[k0..=kplus].fill(vmax);
                kplus += 1;
                k = kplus;
                k0 = kplus;
                if k >= n {
                    return x;
                }
                vmax = y[k];
                umax = -mu;
                umin = y[k] - mu - vmin;
            } else {
                let v = vmin + umin / (k - k0 + 1) as f64;
                x[k0..].fill(v);
                return x;
            }
        }
        if y[k + 1] + umin < vmin - mu {
            x[k0..=kminus].fill(vmin);
            kminus += 1;
            k = kminus;
            k0 = kminus;
            kplus = kminus;
            vmin = y[k];
            vmax = y[k] + 2.0 * mu;
            umin = mu;
            umax = -mu;
        } else if y[k + 1] + umax > vmax + mu {
            x[k0..=kplus].fill(vmax);
            kplus += 1;
            k = kplus;
            k0 = kplus;
            kminus = kplus;
            vmin = y[k] - 2.0 * mu;
            vmax = y[k];
            umin = mu;
            umax = -mu;
        } else {
            k += 1;
            umin += y[k] - vmin;
            umax += y[k] - vmax;
            if umin >= mu {
                vmin += (umin - mu) / (k - k0 + 1) as f64;
                umin = mu;
                kminus = k;
            }
            if umax <= -mu {
                vmax += (umax + mu) / (k - k0 + 1) as f64;
                umax = -mu;
                kplus = k;
            }
        }
    }
}

/// `½‖y − x‖² + μ Σ|x_{k+1} − x_k|`.
pub fn tv1d_objective(y: &[f64], x: &[f64], mu: f64) -> f64 {
    let fit: f64 = y.iter().zip(x).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
    let tv: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    fit + mu * tv
}

/// Piecewise-constant test image with a bright square and a darker disk.
pub fn phantom(rows: usize, cols: usize) -> Vec<f64> {
    let mut v = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let (fr, fc) = (r as f64 / rows as f64, c as f64 / cols as f64);
            let mut val = 0.2 + 0.1 * fc;
            if (0.2..0.55).contains(&fr) && (0.15..0.5).contains(&fc) {
                val = 0.9;
            }
            if (fr - 0.7).powi(2) + (fc - 0.7).powi(2) < 0.03 {
                val = 0.5;
            }
            v[r * cols + c] = val;
        }
    }
    v
}
