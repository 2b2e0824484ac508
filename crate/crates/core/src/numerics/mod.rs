//! Dense linear algebra and elementwise kernels.
//!
//! Everything here is a pure function of its inputs. Matrices are row-major
//! `f64`; see [`Matrix`] for the finiteness invariant.

mod matrix;
mod solve;

use thiserror::Error;

pub use matrix::{axpy, dot, norm2, Matrix, Vector};
pub use solve::{
    cholesky, cholesky_solve, is_symmetric, solve_general, solve_spd, solve_sylvester, sylvester_residual, sylvester_tolerance,
    symmetric_eigen, KRONECKER_MAX_UNKNOWNS, SYMMETRY_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("{op}: shape mismatch, expected {expected:?}, found {found:?}")]
    ShapeMismatch { op: &'static str, expected: (usize, usize), found: (usize, usize) },
    #[error("{op}: matrix of shape {shape:?} is not square")]
    NotSquare { op: &'static str, shape: (usize, usize) },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite (pivot {pivot} = {value:e}); increase the regularizer")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("singular system")]
    Singular,
    #[error("{op}: {size} unknowns exceeds the dense limit of {limit}")]
    TooLarge { op: &'static str, size: usize, limit: usize },
    #[error("{op}: iteration did not converge")]
    NoConvergence { op: &'static str },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("empty input")]
    Empty,
}

/// Numerically stable softmax (the maximum is subtracted before exponentiation).
pub fn softmax(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `ln Σ exp(vᵢ)`, stable for large inputs.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn l2_normalize(v: &[f64]) -> Result<Vector, NumericsError> {
    let n = norm2(v);
    if n == 0.0 {
        return Err(NumericsError::ZeroVector);
    }
    if !n.is_finite() {
        return Err(NumericsError::NonFinite { index: v.iter().position(|x| !x.is_finite()).unwrap_or(0) });
    }
    Ok(Vector::from_raw(v.iter().map(|x| x / n).collect()))
}

/// Cosine similarity; zero when either side is the zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm2(a) * norm2(b);
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}
