use super::DataError;
use crate::numerics::Matrix;

/// Linearly interpolates a `T×d` sequence to `target` rows along time.
///
/// Output row `j` samples the input at position `j·(T−1)/(target−1)`, so the
/// first and last rows are preserved. A single output row samples the
/// midpoint. `T == target` returns the input unchanged.
pub fn resample_sequence(seq: &Matrix, target: usize) -> Result<Matrix, DataError> {
    let t = seq.rows();
    if t == 0 {
        return Err(DataError::EmptySequence);
    }
    if target == 0 {
        return Err(DataError::InvalidConfig("resample target must be at least 1".into()));
    }
    if t == target {
        return Ok(seq.clone());
    }
    let d = seq.cols();
    let span = (t - 1) as f64;
    let mut out = Matrix::zeros(target, d);
    for j in 0..target {
        let pos = if target == 1 { span / 2.0 } else { j as f64 * span / (target - 1) as f64 };
        let lo = (pos.floor() as usize).min(t - 1);
        let hi = (lo + 1).min(t - 1);
        let frac = pos - lo as f64;
        let (a, b) = (seq.row(lo), seq.row(hi));
        for (o, (&x, &y)) in out.row_mut(j).iter_mut().zip(a.iter().zip(b)) {
            *o = if frac == 0.0 { x } else { x + frac * (y - x) };
        }
    }
    Ok(out)
}
