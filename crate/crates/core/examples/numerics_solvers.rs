//! Cholesky SPD solves and the Sylvester solver on small random systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zsslr::numerics::{solve_spd, solve_sylvester, sylvester_residual, sylvester_tolerance, Matrix};

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    for n in [4, 16, 64] {
        let g = random(&mut rng, n, n);
        let mut a = g.gram_rows();
        a.add_diagonal(1e-2);
        let b = random(&mut rng, n, 3);
        let x = solve_spd(&a, &b)?;
        let res = a.matmul(&x)?.sub(&b)?.frobenius_norm() / b.frobenius_norm();
        println!("spd n = {n:>2}: relative residual {res:.2e}");
    }

    // Symmetric A and B take the eigen route, general ones the Kronecker route.
    for (label, symmetric) in [("symmetric", true), ("general", false)] {
        let (m, n) = (6, 9);
        let (mut a, mut b) = (random(&mut rng, m, m), random(&mut rng, n, n));
        if symmetric {
            a = a.gram_rows();
            b = b.gram_rows();
        }
        a.add_diagonal(m as f64);
        b.add_diagonal(n as f64);
        let c = random(&mut rng, m, n);
        let w = solve_sylvester(&a, &b, &c)?;
        let res = sylvester_residual(&a, &b, &c, &w)?;
        println!("sylvester {label:<9}: residual {res:.2e} (bound {:.2e})", sylvester_tolerance(&a, &b, &w));
    }
    Ok(())
}
