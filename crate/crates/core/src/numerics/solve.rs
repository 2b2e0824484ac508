use super::matrix::{dot, Matrix};
use super::NumericsError;

/// Relative tolerance for the symmetry precondition of [`solve_spd`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Largest unknown count accepted by the dense Kronecker route for
/// non-symmetric Sylvester systems (an `N×N` dense factorization).
pub const KRONECKER_MAX_UNKNOWNS: usize = 1024;

fn check_square(a: &Matrix, op: &'static str) -> Result<(), NumericsError> {
    if a.is_square() {
        Ok(())
    } else {
        Err(NumericsError::NotSquare { op, shape: a.shape() })
    }
}

pub fn is_symmetric(a: &Matrix, rel_tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let n = a.rows();
    (0..n).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= rel_tol * scale))
}

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
///
/// Only the lower triangle of `a` is read. Fails on the first pivot that is not
/// positive beyond rounding level (`n·ε·max diag`); callers usually respond by
/// raising a ridge regularizer.
pub fn cholesky(a: &Matrix) -> Result<Matrix, NumericsError> {
    check_square(a, "cholesky")?;
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    // Pivots below this are rounding noise of a singular matrix.
    let floor = n as f64 * f64::EPSILON * (0..n).fold(0.0_f64, |m, i| m.max(a[(i, i)].abs()));
    for j in 0..n {
        let (lj_prefix, diag) = {
            let row = l.row(j);
            let s = dot(&row[..j], &row[..j]);
            (row[..j].to_vec(), a[(j, j)] - s)
        };
        if diag <= floor || !diag.is_finite() {
            return Err(NumericsError::NotPositiveDefinite { pivot: j, value: diag });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let s = dot(&l.row(i)[..j], &lj_prefix);
            l[(i, j)] = (a[(i, j)] - s) / ljj;
        }
    }
    Ok(l)
}

/// Solves `L·Lᵀ·X = B` given the Cholesky factor.
pub fn cholesky_solve(l: &Matrix, b: &Matrix) -> Result<Matrix, NumericsError> {
    let n = l.rows();
    if b.rows() != n {
        return Err(NumericsError::ShapeMismatch { op: "cholesky_solve", expected: (n, b.cols()), found: b.shape() });
    }
    let k = b.cols();
    let mut x = b.clone();
    // Forward: L·Y = B
    for i in 0..n {
        for c in 0..k {
            let mut s = x[(i, c)];
            for p in 0..i {
                s -= l[(i, p)] * x[(p, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    // Backward: Lᵀ·X = Y
    for i in (0..n).rev() {
        for c in 0..k {
            let mut s = x[(i, c)];
            for p in i + 1..n {
                s -= l[(p, i)] * x[(p, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// Solves `A·X = B` for symmetric positive-definite `A` by Cholesky.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix, NumericsError> {
    check_square(a, "solve_spd")?;
    if b.rows() != a.rows() {
        return Err(NumericsError::ShapeMismatch { op: "solve_spd", expected: (a.rows(), b.cols()), found: b.shape() });
    }
    if !is_symmetric(a, SYMMETRY_TOL) {
        return Err(NumericsError::NotSymmetric);
    }
    let l = cholesky(a)?;
    cholesky_solve(&l, b)
}

/// Solves a general square system `A·X = B` by LU with partial pivoting.
pub fn solve_general(a: &Matrix, b: &Matrix) -> Result<Matrix, NumericsError> {
    check_square(a, "solve_general")?;
    let n = a.rows();
    if b.rows() != n {
        return Err(NumericsError::ShapeMismatch { op: "solve_general", expected: (n, b.cols()), found: b.shape() });
    }
    let k = b.cols();
    let mut lu = a.clone();
    let mut x = b.clone();
    let tiny = a.max_abs() * f64::EPSILON * n as f64;
    for col in 0..n {
        let (pivot_row, pivot_abs) =
            (col..n).map(|r| (r, lu[(r, col)].abs())).fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= tiny {
            return Err(NumericsError::Singular);
        }
        if pivot_row != col {
            for c in 0..n {
                let tmp = lu[(col, c)];
                lu[(col, c)] = lu[(pivot_row, c)];
                lu[(pivot_row, c)] = tmp;
            }
            for c in 0..k {
                let tmp = x[(col, c)];
                x[(col, c)] = x[(pivot_row, c)];
                x[(pivot_row, c)] = tmp;
            }
        }
        let p = lu[(col, col)];
        for r in col + 1..n {
            let factor = lu[(r, col)] / p;
            if factor == 0.0 {
                continue;
            }
            lu[(r, col)] = 0.0;
            for c in col + 1..n {
                lu[(r, c)] -= factor * lu[(col, c)];
            }
            for c in 0..k {
                x[(r, c)] -= factor * x[(col, c)];
            }
        }
    }
    for i in (0..n).rev() {
        for c in 0..k {
            let mut s = x[(i, c)];
            for p in i + 1..n {
                s -= lu[(i, p)] * x[(p, c)];
            }
            x[(i, c)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues and a matrix whose columns are the matching orthonormal
/// eigenvectors. Only `(A + Aᵀ)/2` is decomposed.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix), NumericsError> {
    check_square(a, "symmetric_eigen")?;
    let n = a.rows();
    let mut s = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut v = Matrix::identity(n);
    let total = s.frobenius_norm();
    if total == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    const MAX_SWEEPS: usize = 100;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| s[(i, j)].powi(2)).sum();
        if off.sqrt() <= 1e-17 * total {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = s[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (s[(q, q)] - s[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 { 0.5 / theta } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = s[(k, p)];
                    let akq = s[(k, q)];
                    s[(k, p)] = c * akp - sn * akq;
                    s[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = s[(p, k)];
                    let aqk = s[(q, k)];
                    s[(p, k)] = c * apk - sn * aqk;
                    s[(q, k)] = sn * apk + c * aqk;
                }
                s[(p, q)] = 0.0;
                s[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let off: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| s[(i, j)].powi(2)).sum();
        // Rotation round-off can stall just above the target; accept anything negligible.
        if off.sqrt() > 1e-13 * total {
            return Err(NumericsError::NoConvergence { op: "symmetric_eigen" });
        }
    }
    let eigenvalues = (0..n).map(|i| s[(i, i)]).collect();
    Ok((eigenvalues, v))
}

fn check_sylvester_shapes(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<(), NumericsError> {
    check_square(a, "solve_sylvester")?;
    check_square(b, "solve_sylvester")?;
    if c.shape() != (a.rows(), b.rows()) {
        return Err(NumericsError::ShapeMismatch { op: "solve_sylvester", expected: (a.rows(), b.rows()), found: c.shape() });
    }
    Ok(())
}

/// Solves the Sylvester equation `A·W + W·B = C`.
///
/// When both `A` and `B` are symmetric the system is diagonalized with two
/// eigen-decompositions (`W = U·[(UᵀCV)ᵢⱼ / (αᵢ + βⱼ)]·Vᵀ`) followed by one
/// refinement pass. Otherwise the Kronecker form
/// `(I⊗A + Bᵀ⊗I)·vec(W) = vec(C)` is solved densely, which is limited to
/// [`KRONECKER_MAX_UNKNOWNS`] unknowns.
pub fn solve_sylvester(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix, NumericsError> {
    check_sylvester_shapes(a, b, c)?;
    if a.rows() == 0 || b.rows() == 0 {
        return Ok(Matrix::zeros(a.rows(), b.rows()));
    }
    if is_symmetric(a, SYMMETRY_TOL) && is_symmetric(b, SYMMETRY_TOL) {
        solve_sylvester_symmetric(a, b, c)
    } else {
        solve_sylvester_kronecker(a, b, c)
    }
}

fn solve_sylvester_symmetric(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix, NumericsError> {
    let (alpha, u) = symmetric_eigen(a)?;
    let (beta, v) = symmetric_eigen(b)?;
    let scale = alpha.iter().chain(&beta).fold(0.0_f64, |m, x| m.max(x.abs()));
    let floor = 1e-13 * scale.max(f64::MIN_POSITIVE);
    for &ai in &alpha {
        for &bj in &beta {
            if (ai + bj).abs() <= floor {
                return Err(NumericsError::Singular);
            }
        }
    }
    let ut = u.transpose();
    let vt = v.transpose();
    let solve_rotated = |rhs: &Matrix| -> Result<Matrix, NumericsError> {
        let mut rot = ut.matmul(rhs)?.matmul(&v)?;
        for (i, &ai) in alpha.iter().enumerate() {
            for (j, &bj) in beta.iter().enumerate() {
                rot[(i, j)] /= ai + bj;
            }
        }
        u.matmul(&rot)?.matmul(&vt)
    };
    let mut w = solve_rotated(c)?;
    let residual = c.sub(&a.matmul(&w)?)?.sub(&w.matmul(b)?)?;
    let correction = solve_rotated(&residual)?;
    w.add_scaled(1.0, &correction)?;
    if !w.is_finite() {
        return Err(NumericsError::Singular);
    }
    Ok(w)
}

fn solve_sylvester_kronecker(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix, NumericsError> {
    let (m, n) = c.shape();
    let unknowns = m * n;
    if unknowns > KRONECKER_MAX_UNKNOWNS {
        return Err(NumericsError::TooLarge { op: "solve_sylvester", size: unknowns, limit: KRONECKER_MAX_UNKNOWNS });
    }
    // Column-major vec: W[i, j] ↦ i + j·m.
    let mut k = Matrix::zeros(unknowns, unknowns);
    for j in 0..n {
        for i in 0..m {
            let row = i + j * m;
            for p in 0..m {
                k[(row, p + j * m)] += a[(i, p)];
            }
            for l in 0..n {
                k[(row, i + l * m)] += b[(l, j)];
            }
        }
    }
    let rhs = Matrix::from_fn(unknowns, 1, |r, _| c[(r % m, r / m)]);
    let sol = solve_general(&k, &rhs)?;
    Ok(Matrix::from_fn(m, n, |i, j| sol[(i + j * m, 0)]))
}

/// `‖A·W + W·B − C‖_F`.
pub fn sylvester_residual(a: &Matrix, b: &Matrix, c: &Matrix, w: &Matrix) -> Result<f64, NumericsError> {
    Ok(a.matmul(w)?.add(&w.matmul(b)?)?.sub(c)?.frobenius_norm())
}

/// Residual bound the Sylvester solver guarantees:
/// `1e-8 · (‖A‖_F + ‖B‖_F) · (1 + ‖W‖_F)`.
pub fn sylvester_tolerance(a: &Matrix, b: &Matrix, w: &Matrix) -> f64 {
    1e-8 * (a.frobenius_norm() + b.frobenius_norm()) * (1.0 + w.frobenius_norm())
}
