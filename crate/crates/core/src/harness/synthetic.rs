//! Built-in stand-in datasets for the video and spectral paths.

use crate::tensor::{GridShape, SignalTensor};

/// Video of two objects moving over a smooth background, values in `[0, 1]`.
///
/// A bright rectangle drifts right and down; a darker disk drifts left.
pub fn moving_rectangle_video(rows: usize, cols: usize, frames: usize) -> SignalTensor {
    let mut data = Vec::with_capacity(rows * cols * frames);
    let (h, w) = (rows as f64, cols as f64);
    for f in 0..frames {
        let ft = f as f64;
        let rect_top = 0.2 * h + ft;
        let rect_left = 0.15 * w + 2.0 * ft;
        let (rect_h, rect_w) = (0.3 * h, 0.25 * w);
        let disk_r = 0.12 * h.min(w);
        let (disk_y, disk_x) = (0.65 * h, 0.75 * w - 1.5 * ft);
        for r in 0..rows {
            for c in 0..cols {
                let (y, x) = (r as f64, c as f64);
                let mut v = 0.25 + 0.15 * (x / w) + 0.1 * (y / h);
                if y >= rect_top && y < rect_top + rect_h && x >= rect_left && x < rect_left + rect_w {
                    v = 0.9;
                }
                if (y - disk_y).powi(2) + (x - disk_x).powi(2) <= disk_r * disk_r {
                    v = 0.55;
                }
                data.push(v);
            }
        }
    }
    SignalTensor::new(data, GridShape::Volume { rows, cols, frames })
        .expect("sized by construction")
        .with_range(0.0, 1.0)
}

/// Spectral cube of a few Gaussian blobs, each with its own smooth spectral
/// signature, normalized to `[0, 1]`.
pub fn gaussian_blob_cube(rows: usize, cols: usize, bands: usize) -> SignalTensor {
    // (centre y, centre x, sigma) as fractions of the image size, plus signature phase
    let blobs = [
        (0.30, 0.30, 0.12, 0.0),
        (0.65, 0.35, 0.10, 1.3),
        (0.40, 0.72, 0.15, 2.6),
        (0.78, 0.75, 0.08, 4.0),
    ];
    let (h, w) = (rows as f64, cols as f64);
    let scale = h.min(w);
    let mut data = Vec::with_capacity(rows * cols * bands);
    for b in 0..bands {
        let t = if bands > 1 { b as f64 / (bands - 1) as f64 } else { 0.0 };
        for r in 0..rows {
            for c in 0..cols {
                let v: f64 = blobs
                    .iter()
                    .map(|&(cy, cx, s, phase)| {
                        let dy = (r as f64 - cy * h) / (s * scale);
                        let dx = (c as f64 - cx * w) / (s * scale);
                        let spectrum = 0.55 + 0.45 * (std::f64::consts::PI * t + phase).cos();
                        spectrum * (-0.5 * (dy * dy + dx * dx)).exp()
                    })
                    .sum();
                data.push(0.05 + v);
            }
        }
    }
    let max = data.iter().cloned().fold(0.0, f64::max);
    data.iter_mut().for_each(|v| *v /= max);
    SignalTensor::new(data, GridShape::Volume { rows, cols, frames: bands })
        .expect("sized by construction")
        .with_range(0.0, 1.0)
}
