//! GAP-TV, accelerated GAP-TV and ADMM-TV.
//!
//! All three alternate a data-consistency update of `x` with a TV-denoising
//! update of `θ`. They differ only in the `x` step:
//!
//! * GAP-TV: Euclidean projection of `θ` onto `{x : Φx = y}`.
//! * Accelerated GAP-TV: the same projection onto `{x : Φx = y⁽ᵗ⁾}` where the
//!   target `y⁽ᵗ⁾` is adapted from past residuals.
//! * ADMM-TV: minimizer of `½‖y − Φx‖² + (η/2)‖x − θ‖²`.
//!
//! Every operator in this crate has a diagonal `ΦΦᵀ = diag(r)`, so each `x`
//! step costs one forward and one adjoint application.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{check_len, Error, Result};
use crate::operators::{DifferenceOperator, SensingOperator};
use crate::tensor::{norm, Measurement, SignalTensor};
use crate::tvdenoise::tv_denoise_slice;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    GapTv,
    AccGapTv,
    AdmmTv,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::GapTv, Algorithm::AccGapTv, Algorithm::AdmmTv];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GapTv => "gap-tv",
            Algorithm::AccGapTv => "acc-gap-tv",
            Algorithm::AdmmTv => "admm-tv",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gap-tv" | "gaptv" | "gap" => Ok(Algorithm::GapTv),
            "acc-gap-tv" | "accgaptv" | "acc" => Ok(Algorithm::AccGapTv),
            "admm-tv" | "admmtv" | "admm" => Ok(Algorithm::AdmmTv),
            other => Err(Error::invalid(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// How accelerated GAP adapts its projection target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccelVariant {
    /// `y⁽ᵗ⁾ = y⁽ᵗ⁻¹⁾ + (y − Φθ⁽ᵗ⁻¹⁾)`
    Cumulative,
    /// `y⁽ᵗ⁾ = y + Δ (y − Φθ⁽ᵗ⁻¹⁾)`
    DeltaScaled,
}

impl AccelVariant {
    pub fn name(self) -> &'static str {
        match self {
            AccelVariant::Cumulative => "cumulative",
            AccelVariant::DeltaScaled => "delta-scaled",
        }
    }
}

impl FromStr for AccelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cumulative" => Ok(AccelVariant::Cumulative),
            "delta-scaled" | "delta" => Ok(AccelVariant::DeltaScaled),
            other => Err(Error::invalid(format!("unknown acceleration variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// TV weight for unit-range data. The denoiser receives `lambda * data_range`.
    pub lambda: f64,
    /// Nominal dynamic range of the signal (1 for normalized data, 255 for 8-bit).
    pub data_range: f64,
    /// ADMM proximity weight.
    pub eta: f64,
    /// Target scaling of the `DeltaScaled` acceleration.
    pub delta: f64,
    pub accel_variant: AccelVariant,
    pub max_outer_iters: usize,
    pub inner_denoise_iters: usize,
    /// Stop once `‖x⁽ᵗ⁾ − x⁽ᵗ⁻¹⁾‖ / ‖x⁽ᵗ⁻¹⁾‖` falls below this.
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::GapTv,
            lambda: 0.015,
            data_range: 1.0,
            eta: 0.5,
            delta: 1.0,
            accel_variant: AccelVariant::Cumulative,
            max_outer_iters: 100,
            inner_denoise_iters: 50,
            tolerance: 1e-5,
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.data_range > 0.0 && self.data_range.is_finite()) {
            return Err(Error::invalid(format!("data range must be positive, got {}", self.data_range)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("eta must be nonnegative, got {}", self.eta)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be nonnegative, got {}", self.delta)));
        }
        if self.max_outer_iters == 0 || self.inner_denoise_iters == 0 {
            return Err(Error::invalid("iteration budgets must be positive"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("tolerance must be nonnegative"));
        }
        Ok(())
    }

    /// Strength handed to the TV denoiser in the `θ` step.
    ///
    /// ADMM's `θ` subproblem weighs the fit by `η/2`, hence `λ/η`; at `η = 0`
    /// the method collapses to GAP-TV and uses `λ`.
    pub fn denoise_strength(&self) -> f64 {
        let base = self.lambda * self.data_range;
        match self.algorithm {
            Algorithm::AdmmTv if self.eta > 0.0 => base / self.eta,
            _ => base,
        }
    }

    /// `key = value` lines echoing every parameter.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("algorithm", self.algorithm.name().to_string()),
            ("lambda", self.lambda.to_string()),
            ("data_range", self.data_range.to_string()),
            ("eta", self.eta.to_string()),
            ("delta", self.delta.to_string()),
            ("accel_variant", self.accel_variant.name().to_string()),
            ("max_outer_iters", self.max_outer_iters.to_string()),
            ("inner_denoise_iters", self.inner_denoise_iters.to_string()),
            ("tolerance", self.tolerance.to_string()),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// Final estimate: one more `x` step from the last `θ` against the observed
    /// `y` (accelerated GAP projects onto `y`, not its adapted target).
    pub x_hat: SignalTensor,
    /// The last denoised iterate `θ`.
    pub theta: SignalTensor,
    pub outer_iters_used: usize,
    /// `‖y − Φθ⁽ᵗ⁾‖` after each outer iteration.
    pub residual_history: Vec<f64>,
    pub config_echo: SolverConfig,
    pub wall_time: f64,
}

/// Snapshot passed to an observer after each outer iteration.
#[derive(Debug)]
pub struct IterateEvent<'a> {
    /// 1-based outer iteration.
    pub iteration: usize,
    pub x: &'a [f64],
    pub theta: &'a [f64],
    /// Projection target used for this `x` (equals `y` except in accelerated GAP).
    pub target: &'a [f64],
}

/// `θ + Φᵀ diag(1/(η + r)) (target − Φθ)`, given `Φθ`.
fn diagonal_update(op: &SensingOperator, theta: &[f64], phi_theta: &[f64], target: &[f64], eta: f64) -> Result<Vec<f64>> {
    let a: Vec<f64> = target
        .iter()
        .zip(phi_theta)
        .zip(op.gram_diag())
        .map(|((t, p), r)| (t - p) / (eta + r))
        .collect();
    let mut x = op.apply_adjoint(&a)?;
    for (xi, ti) in x.iter_mut().zip(theta) {
        *xi += ti;
    }
    Ok(x)
}

fn check_admm_gram(op: &SensingOperator, eta: f64) -> Result<()> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("eta must be nonnegative, got {eta}")));
    }
    if let Some(index) = op.gram_diag().iter().position(|&r| eta + r <= 0.0) {
        return Err(Error::SingularGram {
            index,
            value: op.gram_diag()[index],
        });
    }
    Ok(())
}

/// Nearest point to `theta` on `{x : Φx = y_target}`:
/// `x = θ + Φᵀ(ΦΦᵀ)⁻¹(y − Φθ)`.
pub fn euclidean_projection(op: &SensingOperator, theta: &SignalTensor, y_target: &Measurement) -> Result<SignalTensor> {
    check_len(op.n_cols(), theta.len())?;
    check_len(op.n_rows(), y_target.len())?;
    op.check_gram_invertible()?;
    let phi_theta = op.apply(theta.data())?;
    let x = diagonal_update(op, theta.data(), &phi_theta, y_target.data(), 0.0)?;
    let (lo, hi) = theta.value_range;
    Ok(SignalTensor::new(x, theta.shape())?.with_range(lo, hi))
}

/// Minimizer of `½‖y − Φx‖² + (η/2)‖x − θ‖²`:
/// `x = θ + Φᵀa` with `a_m = [y − Φθ]_m / (η + r_m)`.
pub fn admm_x_update(op: &SensingOperator, theta: &SignalTensor, y: &Measurement, eta: f64) -> Result<SignalTensor> {
    check_len(op.n_cols(), theta.len())?;
    check_len(op.n_rows(), y.len())?;
    check_admm_gram(op, eta)?;
    let phi_theta = op.apply(theta.data())?;
    let x = diagonal_update(op, theta.data(), &phi_theta, y.data(), eta)?;
    let (lo, hi) = theta.value_range;
    Ok(SignalTensor::new(x, theta.shape())?.with_range(lo, hi))
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let diff = new
        .iter()
        .zip(old)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let base = norm(old);
    if base > 0.0 {
        diff / base
    } else if diff > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Runs the algorithm named in `config`, calling `observer` after every outer iteration.
pub fn reconstruct_observed(
    op: &SensingOperator,
    y: &Measurement,
    d: &DifferenceOperator,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&IterateEvent<'_>),
) -> Result<ReconstructionResult> {
    config.validate()?;
    check_len(op.n_rows(), y.len())?;
    check_len(op.n_cols(), d.signal_len())?;
    match config.algorithm {
        Algorithm::GapTv | Algorithm::AccGapTv => op.check_gram_invertible()?,
        Algorithm::AdmmTv => check_admm_gram(op, config.eta)?,
    }

    let start = Instant::now();
    let strength = config.denoise_strength();
    let y = y.data();

    // θ⁽⁰⁾ = Φᵀ diag(1/r) y, the projection of 0 onto the data manifold
    let zero = vec![0.0; op.n_rows()];
    let mut theta = diagonal_update(op, &vec![0.0; op.n_cols()], &zero, y, 0.0)?;
    let mut target = y.to_vec();
    let mut x_prev: Option<Vec<f64>> = None;
    let mut residual_history = Vec::with_capacity(config.max_outer_iters);
    let mut used_target = Vec::new();
    let final_eta = if config.algorithm == Algorithm::AdmmTv { config.eta } else { 0.0 };

    for t in 1..=config.max_outer_iters {
        let phi_theta = op.apply(&theta)?;
        let x = match config.algorithm {
            Algorithm::GapTv => diagonal_update(op, &theta, &phi_theta, y, 0.0)?,
            Algorithm::AccGapTv => {
                let x = diagonal_update(op, &theta, &phi_theta, &target, 0.0)?;
                used_target.clone_from(&target);
                match config.accel_variant {
                    AccelVariant::Cumulative => {
                        for ((tg, yi), p) in target.iter_mut().zip(y).zip(&phi_theta) {
                            *tg += yi - p;
                        }
                    }
                    AccelVariant::DeltaScaled => {
                        for ((tg, yi), p) in target.iter_mut().zip(y).zip(&phi_theta) {
                            *tg = yi + config.delta * (yi - p);
                        }
                    }
                }
                x
            }
            Algorithm::AdmmTv => diagonal_update(op, &theta, &phi_theta, y, config.eta)?,
        };

        theta = tv_denoise_slice(&x, strength, config.inner_denoise_iters, d)?;

        let phi_theta = op.apply(&theta)?;
        let residual = y
            .iter()
            .zip(&phi_theta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        residual_history.push(residual);

        observer(&IterateEvent {
            iteration: t,
            x: &x,
            theta: &theta,
            target: if config.algorithm == Algorithm::AccGapTv { &used_target } else { y },
        });

        let converged = x_prev
            .as_deref()
            .is_some_and(|prev| relative_change(&x, prev) < config.tolerance);
        if converged {
            break;
        }
        x_prev = Some(x);
    }

    let phi_theta = op.apply(&theta)?;
    let x_hat = diagonal_update(op, &theta, &phi_theta, y, final_eta)?;
    let shape = op.signal_shape();
    let range = (0.0, config.data_range);
    Ok(ReconstructionResult {
        outer_iters_used: residual_history.len(),
        x_hat: SignalTensor::new(x_hat, shape)?.with_range(range.0, range.1),
        theta: SignalTensor::new(theta, shape)?.with_range(range.0, range.1),
        residual_history,
        config_echo: config.clone(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

pub fn reconstruct(op: &SensingOperator, y: &Measurement, d: &DifferenceOperator, config: &SolverConfig) -> Result<ReconstructionResult> {
    reconstruct_observed(op, y, d, config, &mut |_| {})
}

fn require(config: &SolverConfig, algorithm: Algorithm) -> Result<()> {
    if config.algorithm == algorithm {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "config names {}, expected {}",
            config.algorithm, algorithm
        )))
    }
}

pub fn gap_tv(op: &SensingOperator, y: &Measurement, d: &DifferenceOperator, config: &SolverConfig) -> Result<ReconstructionResult> {
    require(config, Algorithm::GapTv)?;
    reconstruct(op, y, d, config)
}

pub fn acc_gap_tv(op: &SensingOperator, y: &Measurement, d: &DifferenceOperator, config: &SolverConfig) -> Result<ReconstructionResult> {
    require(config, Algorithm::AccGapTv)?;
    reconstruct(op, y, d, config)
}

pub fn admm_tv(op: &SensingOperator, y: &Measurement, d: &DifferenceOperator, config: &SolverConfig) -> Result<ReconstructionResult> {
    require(config, Algorithm::AdmmTv)?;
    reconstruct(op, y, d, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{MaskStack, ShiftPattern};
    use crate::tensor::GridShape;

    const SHAPE: GridShape = GridShape::Image { rows: 16, cols: 16 };

    fn smooth_image() -> SignalTensor {
        let data = (0..256)
            .map(|k| {
                let (i, j) = ((k / 16) as f64, (k % 16) as f64);
                if (4.0..11.0).contains(&i) && (3.0..9.0).contains(&j) { 0.8 } else { 0.2 + 0.01 * j }
            })
            .collect();
        SignalTensor::new(data, SHAPE).unwrap()
    }

    fn quick(alg: Algorithm) -> SolverConfig {
        SolverConfig {
            max_outer_iters: 20,
            inner_denoise_iters: 20,
            ..SolverConfig::new(alg)
        }
    }

    fn setup(m: usize) -> (SensingOperator, Measurement, DifferenceOperator) {
        let op = SensingOperator::permuted_hadamard(SHAPE, m, 3).unwrap();
        let y = op.forward(&smooth_image()).unwrap();
        (op, y, DifferenceOperator::new(SHAPE))
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn projection_is_feasible_and_fixes_feasible_points() {
        let (op, y, _) = setup(80);
        let theta = SignalTensor::new((0..256).map(|k| (k as f64 * 0.37).sin()).collect(), SHAPE).unwrap();
        let x = euclidean_projection(&op, &theta, &y).unwrap();
        assert!(max_abs_diff(&op.apply(x.data()).unwrap(), y.data()) < 1e-10);
        let again = euclidean_projection(&op, &x, &y).unwrap();
        assert!(max_abs_diff(again.data(), x.data()) < 1e-12);
    }

    #[test]
    fn full_orthonormal_projection_is_adjoint() {
        let (op, y, _) = setup(256);
        let theta = SignalTensor::zeros(SHAPE);
        let x = euclidean_projection(&op, &theta, &y).unwrap();
        assert!(max_abs_diff(x.data(), op.apply_adjoint(y.data()).unwrap().as_slice()) < 1e-12);
        assert!(max_abs_diff(x.data(), smooth_image().data()) < 1e-12);
    }

    #[test]
    fn constant_truth_is_recovered() {
        let op = SensingOperator::permuted_hadamard(SHAPE, 26, 5).unwrap();
        let truth = SignalTensor::new(vec![0.6; 256], SHAPE).unwrap();
        let y = op.forward(&truth).unwrap();
        let r = gap_tv(&op, &y, &DifferenceOperator::new(SHAPE), &quick(Algorithm::GapTv)).unwrap();
        assert!(max_abs_diff(r.x_hat.data(), truth.data()) < 1e-10);
    }

    #[test]
    fn admm_with_zero_eta_matches_gap() {
        let (op, y, d) = setup(80);
        let gap = reconstruct(&op, &y, &d, &quick(Algorithm::GapTv)).unwrap();
        let admm = reconstruct(&op, &y, &d, &SolverConfig { eta: 0.0, ..quick(Algorithm::AdmmTv) }).unwrap();
        assert_eq!(gap.x_hat.data(), admm.x_hat.data());
        assert_eq!(gap.outer_iters_used, admm.outer_iters_used);
    }

    #[test]
    fn delta_zero_acceleration_matches_gap() {
        let (op, y, d) = setup(80);
        let gap = reconstruct(&op, &y, &d, &quick(Algorithm::GapTv)).unwrap();
        let cfg = SolverConfig {
            delta: 0.0,
            accel_variant: AccelVariant::DeltaScaled,
            ..quick(Algorithm::AccGapTv)
        };
        let acc = reconstruct(&op, &y, &d, &cfg).unwrap();
        assert_eq!(gap.x_hat.data(), acc.x_hat.data());
    }

    #[test]
    fn admm_update_tends_to_theta_for_large_eta() {
        let (op, y, _) = setup(80);
        let theta = SignalTensor::new(vec![0.3; 256], SHAPE).unwrap();
        let x = admm_x_update(&op, &theta, &y, 1e9).unwrap();
        assert!(max_abs_diff(x.data(), theta.data()) < 1e-7);
        let x0 = admm_x_update(&op, &theta, &y, 0.0).unwrap();
        let p = euclidean_projection(&op, &theta, &y).unwrap();
        assert_eq!(x0.data(), p.data());
    }

    #[test]
    fn every_gap_iterate_is_feasible() {
        let (op, y, d) = setup(80);
        for alg in [Algorithm::GapTv, Algorithm::AccGapTv] {
            let mut worst: f64 = 0.0;
            reconstruct_observed(&op, &y, &d, &quick(alg), &mut |ev| {
                let phi_x = op.apply(ev.x).unwrap();
                worst = worst.max(max_abs_diff(&phi_x, ev.target));
            })
            .unwrap();
            assert!(worst < 1e-10, "{alg}: {worst}");
        }
    }

    #[test]
    fn coded_aperture_runs_are_feasible() {
        let stack = MaskStack::random(12, 12, 4, 0.5, ShiftPattern::Vertical, 9).unwrap();
        let op = SensingOperator::coded_aperture(stack);
        let shape = op.signal_shape();
        let truth = SignalTensor::new((0..shape.len()).map(|k| (k % 7) as f64 / 7.0).collect(), shape).unwrap();
        let y = op.forward(&truth).unwrap();
        let r = gap_tv(&op, &y, &DifferenceOperator::new(shape), &quick(Algorithm::GapTv)).unwrap();
        assert!(max_abs_diff(&op.apply(r.x_hat.data()).unwrap(), y.data()) < 1e-10);
    }

    #[test]
    fn runs_are_deterministic() {
        let (op, y, d) = setup(80);
        for alg in Algorithm::ALL {
            let a = reconstruct(&op, &y, &d, &quick(alg)).unwrap();
            let b = reconstruct(&op, &y, &d, &quick(alg)).unwrap();
            assert_eq!(a.x_hat.data(), b.x_hat.data());
            assert_eq!(a.residual_history, b.residual_history);
        }
    }

    #[test]
    fn wrong_algorithm_and_bad_config_are_rejected() {
        let (op, y, d) = setup(80);
        assert!(admm_tv(&op, &y, &d, &quick(Algorithm::GapTv)).is_err());
        let bad = SolverConfig { lambda: -1.0, ..quick(Algorithm::GapTv) };
        assert!(matches!(gap_tv(&op, &y, &d, &bad), Err(Error::InvalidArgument(_))));
        let short = Measurement::new(vec![0.0; 10]);
        assert!(matches!(gap_tv(&op, &short, &d, &quick(Algorithm::GapTv)), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn algorithm_names_round_trip() {
        for alg in Algorithm::ALL {
            assert_eq!(alg.name().parse::<Algorithm>().unwrap(), alg);
        }
        assert!("sgd".parse::<Algorithm>().is_err());
    }
}
