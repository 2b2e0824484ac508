//! ESZSL and SAE closed forms: objective at the solution versus perturbations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zsslr::data::ClassId;
use zsslr::numerics::Matrix;
use zsslr::zsl::{eszsl_objective, eszsl_targets, fit_eszsl, fit_sae, sae_objective, TargetEncoding};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (d, m, n, c) = (8, 6, 40, 10);
    let x = Matrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0));
    let s = Matrix::from_fn(m, c, |_, _| rng.random_range(-1.0..1.0));
    let labels: Vec<ClassId> = (0..n).map(|i| ClassId((i % c) as u32)).collect();
    let classes: Vec<ClassId> = (0..c as u32).map(ClassId).collect();
    let y = eszsl_targets(&labels, &classes, TargetEncoding::Binary)?;
    let (gamma, lambda) = (0.1, 0.01);

    let w = fit_eszsl(&x, &y, &s, gamma, lambda)?;
    let best = eszsl_objective(&w, &x, &y, &s, gamma, lambda)?;
    let bumped = w.add(&Matrix::from_fn(d, m, |_, _| 1e-3 * rng.random_range(-1.0..1.0)))?;
    println!("ESZSL objective {best:.6}, perturbed {:.6}", eszsl_objective(&bumped, &x, &y, &s, gamma, lambda)?);

    let per_sample = Matrix::from_fn(m, n, |i, j| s[(i, j % c)]);
    let p = fit_sae(&x, &per_sample, 0.5)?;
    let best = sae_objective(&p, &x, &per_sample, 0.5)?;
    let bumped = p.add(&Matrix::from_fn(m, d, |_, _| 1e-3 * rng.random_range(-1.0..1.0)))?;
    println!("SAE   objective {best:.6}, perturbed {:.6}", sae_objective(&bumped, &x, &per_sample, 0.5)?);
    Ok(())
}
