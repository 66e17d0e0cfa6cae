use crate::error::{Error, Result};

/// In-place orthonormal fast Walsh–Hadamard transform (natural/Hadamard ordering).
///
/// The transform is scaled by `1/sqrt(n)`, which makes it symmetric and
/// orthogonal, so applying it twice is the identity. `data.len()` must be a
/// power of two.
pub fn fwht_in_place(data: &mut [f64]) -> Result<()> {
    let n = data.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(format!(
            "Walsh-Hadamard length must be a power of two, got {n}"
        )));
    }
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    data.iter_mut().for_each(|v| *v *= scale);
    Ok(())
}

/// Orthonormal Walsh–Hadamard transform of `v`, returned as a new vector.
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}
