mod common;

use common::{rng, sylvester_kronecker_oracle, uniform};
use proptest::prelude::*;
use zsslr::numerics::{
    cholesky, log_sum_exp, softmax, solve_general, solve_spd, solve_sylvester, sylvester_residual, sylvester_tolerance, Matrix,
    NumericsError, KRONECKER_MAX_UNKNOWNS,
};

fn spd(seed: u64, n: usize) -> Matrix {
    let g = uniform(&mut rng(seed), n, n);
    let mut a = g.gram_rows();
    a.add_diagonal(0.5);
    a
}

#[test]
fn spd_solve_residual_up_to_64() {
    for n in [1, 2, 5, 17, 32, 64] {
        let a = spd(n as u64, n);
        let b = uniform(&mut rng(100 + n as u64), n, 3);
        let x = solve_spd(&a, &b).unwrap();
        let res = a.matmul(&x).unwrap().sub(&b).unwrap().frobenius_norm();
        assert!(res <= 1e-10 * (a.frobenius_norm() * x.frobenius_norm()).max(1.0), "n = {n}: residual {res}");
    }
}

#[test]
fn cholesky_reconstructs() {
    let a = spd(3, 9);
    let l = cholesky(&a).unwrap();
    assert!(l.matmul(&l.transpose()).unwrap().max_abs_diff(&a).unwrap() < 1e-12);
    for i in 0..9 {
        for j in i + 1..9 {
            assert_eq!(l[(i, j)], 0.0);
        }
    }
}

#[test]
fn indefinite_matrix_is_rejected() {
    let a = Matrix::from_diagonal(&[1.0, -1.0]);
    assert!(matches!(solve_spd(&a, &Matrix::identity(2)), Err(NumericsError::NotPositiveDefinite { .. })));
}

#[test]
fn general_solve_handles_permutation() {
    let a = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
    let b = Matrix::from_rows(&[[2.0], [3.0]]).unwrap();
    assert_eq!(solve_general(&a, &b).unwrap().values(), &[3.0, 2.0]);
}

#[test]
fn softmax_is_shift_invariant_and_stable() {
    let p = softmax(&[1000.0, 1000.0, 1000.0 - f64::ln(2.0)]);
    assert!((p[0] - 0.4).abs() < 1e-12 && (p[2] - 0.2).abs() < 1e-12);
    assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + f64::ln(2.0))).abs() < 1e-12);
}

#[test]
fn oversized_kronecker_system_is_refused() {
    let n = 33;
    assert!(n * n > KRONECKER_MAX_UNKNOWNS);
    let mut a = uniform(&mut rng(1), n, n);
    a[(0, 1)] += 1.0; // certainly not symmetric
    let err = solve_sylvester(&a, &a, &Matrix::zeros(n, n)).unwrap_err();
    assert!(matches!(err, NumericsError::TooLarge { .. }), "{err}");
}

#[test]
fn large_symmetric_sylvester_uses_eigen_route() {
    let (a, b) = (spd(5, 60), spd(6, 40));
    let c = uniform(&mut rng(7), 60, 40);
    let w = solve_sylvester(&a, &b, &c).unwrap();
    assert!(sylvester_residual(&a, &b, &c, &w).unwrap() <= sylvester_tolerance(&a, &b, &w));
}

fn sylvester_case(seed: u64, m: usize, n: usize, symmetric: bool) -> (Matrix, Matrix, Matrix) {
    let mut r = rng(seed);
    let (mut a, mut b) = (uniform(&mut r, m, m), uniform(&mut r, n, n));
    if symmetric {
        a = a.gram_rows();
        b = b.gram_rows();
        a.add_diagonal(0.1);
        b.add_diagonal(0.1);
    } else {
        a.add_diagonal(m as f64);
        b.add_diagonal(n as f64);
    }
    let c = uniform(&mut r, m, n);
    (a, b, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sylvester_matches_kronecker_oracle(seed in any::<u64>(), m in 1usize..=10, n in 1usize..=10, symmetric in any::<bool>()) {
        let (a, b, c) = sylvester_case(seed, m, n, symmetric);
        let w = solve_sylvester(&a, &b, &c).unwrap();
        let oracle = sylvester_kronecker_oracle(&a, &b, &c);
        prop_assert!(w.max_abs_diff(&oracle).unwrap() <= 1e-9);
        prop_assert!(sylvester_residual(&a, &b, &c, &w).unwrap() <= sylvester_tolerance(&a, &b, &w));
    }

    #[test]
    fn spd_solve_inverts(seed in any::<u64>(), n in 1usize..=24) {
        let a = spd(seed, n);
        let x_true = uniform(&mut rng(seed ^ 1), n, 2);
        let b = a.matmul(&x_true).unwrap();
        let x = solve_spd(&a, &b).unwrap();
        let res = a.matmul(&x).unwrap().sub(&b).unwrap().frobenius_norm();
        prop_assert!(res <= 1e-12 * a.frobenius_norm() * x.frobenius_norm() + 1e-14);
    }
}
