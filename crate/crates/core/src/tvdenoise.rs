//! Anisotropic TV denoising by iterative clipping.
//!
//! Starting from `z = 0`, `θ = x`, each iteration performs
//!
//! ```text
//! z ← clip(z + (1/α) D θ, λ/2)
//! θ ← x − Dᵀ z
//! ```
//!
//! with `α ≥ maxeig(DDᵀ)`. This is projected gradient ascent on the dual of
//! `min_θ ½‖x − θ‖² + (λ/2)‖Dθ‖₁`, so `z` stays inside the box `[-λ/2, λ/2]`
//! after every step.

use crate::error::{Error, Result};
use crate::operators::DifferenceOperator;
use crate::tensor::SignalTensor;

/// `b` clipped to `[-t, t]`.
#[inline]
pub fn clip(b: f64, t: f64) -> f64 {
    if b.abs() <= t {
        b
    } else {
        t.copysign(b)
    }
}

/// Iterate state of the clipping recursion.
#[derive(Debug, Clone)]
pub struct DenoiseState<'a> {
    d: &'a DifferenceOperator,
    x: &'a [f64],
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub iteration: usize,
    dtheta: Vec<f64>,
    dtz: Vec<f64>,
}

impl<'a> DenoiseState<'a> {
    pub fn new(d: &'a DifferenceOperator, x: &'a [f64], lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive and finite, got {lambda}")));
        }
        if x.len() != d.signal_len() {
            return Err(Error::ShapeMismatch {
                expected: d.signal_len(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("denoiser input contains non-finite values"));
        }
        Ok(Self {
            d,
            x,
            theta: x.to_vec(),
            z: vec![0.0; d.output_len()],
            lambda,
            alpha: d.alpha_bound(),
            iteration: 0,
            dtheta: vec![0.0; d.output_len()],
            dtz: vec![0.0; d.signal_len()],
        })
    }

    pub fn step(&mut self) {
        let half = self.lambda / 2.0;
        let inv_alpha = 1.0 / self.alpha;
        // lengths were validated in `new`
        self.d
            .apply_into(&self.theta, &mut self.dtheta)
            .expect("difference buffer sized at construction");
        for (z, g) in self.z.iter_mut().zip(&self.dtheta) {
            *z = clip(*z + inv_alpha * g, half);
        }
        self.d
            .adjoint_into(&self.z, &mut self.dtz)
            .expect("difference buffer sized at construction");
        for ((t, x), v) in self.theta.iter_mut().zip(self.x).zip(&self.dtz) {
            *t = x - v;
        }
        self.iteration += 1;
    }

    pub fn max_abs_z(&self) -> f64 {
        self.z.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Raw-slice form of [`tv_denoise`].
pub fn tv_denoise_slice(x: &[f64], lambda: f64, n_iters: usize, d: &DifferenceOperator) -> Result<Vec<f64>> {
    if n_iters == 0 {
        return Err(Error::invalid("denoiser needs at least one iteration"));
    }
    let mut state = DenoiseState::new(d, x, lambda)?;
    for _ in 0..n_iters {
        state.step();
    }
    Ok(state.theta)
}

/// Runs `n_iters` clipping iterations on `x` with regularization `lambda`.
pub fn tv_denoise(x: &SignalTensor, lambda: f64, n_iters: usize, d: &DifferenceOperator) -> Result<SignalTensor> {
    let theta = tv_denoise_slice(x.data(), lambda, n_iters, d)?;
    let (lo, hi) = x.value_range;
    Ok(SignalTensor::new(theta, x.shape())?.with_range(lo, hi))
}

/// The objective whose minimizer the recursion approaches:
/// `½‖x − θ‖² + (λ/2)‖Dθ‖₁`.
pub fn denoise_objective(x: &[f64], theta: &[f64], lambda: f64, d: &DifferenceOperator) -> Result<f64> {
    let fit: f64 = x.iter().zip(theta).map(|(a, b)| (a - b) * (a - b)).sum();
    let tv: f64 = d.apply(theta)?.iter().map(|v| v.abs()).sum();
    Ok(0.5 * fit + 0.5 * lambda * tv)
}
