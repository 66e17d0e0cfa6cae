use crate::error::{check_len, Error, Result};
use crate::operators::SensingOperator;
use crate::tensor::SignalTensor;

/// Peak signal-to-noise ratio in dB. Inputs that agree to within
/// [`EXACT_TOLERANCE`]` · peak` everywhere give `+inf` with `exact_match` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psnr {
    pub db: f64,
    pub exact_match: bool,
}

/// Largest per-sample deviation, relative to the peak, still counted as an exact
/// match (transform round trips leave rounding noise near 1e-13).
pub const EXACT_TOLERANCE: f64 = 1e-9;

pub fn psnr_slices(reference: &[f64], estimate: &[f64], peak: f64) -> Result<Psnr> {
    check_len(reference.len(), estimate.len())?;
    if !(peak > 0.0) {
        return Err(Error::invalid(format!("PSNR peak must be positive, got {peak}")));
    }
    if reference.is_empty() {
        return Err(Error::invalid("PSNR of empty signals"));
    }
    let sse: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let max_dev = reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if max_dev <= EXACT_TOLERANCE * peak {
        return Ok(Psnr {
            db: f64::INFINITY,
            exact_match: true,
        });
    }
    let mse = sse / reference.len() as f64;
    Ok(Psnr {
        db: 10.0 * (peak * peak / mse).log10(),
        exact_match: false,
    })
}

/// `10·log10(peak² / MSE)`.
pub fn psnr(reference: &SignalTensor, estimate: &SignalTensor, peak: f64) -> Result<Psnr> {
    psnr_slices(reference.data(), estimate.data(), peak)
}

/// PSNR of every frame of a cube.
pub fn per_frame_psnr(reference: &SignalTensor, estimate: &SignalTensor, peak: f64) -> Result<Vec<Psnr>> {
    check_len(reference.len(), estimate.len())?;
    (0..reference.shape().frames())
        .map(|f| psnr_slices(reference.frame(f), estimate.frame(f), peak))
        .collect()
}

/// Compression ratio: rows of `Φ` over columns of `Φ`.
pub fn csr(op: &SensingOperator) -> f64 {
    op.csr()
}
