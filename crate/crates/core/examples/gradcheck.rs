//! Finite-difference check of every analytic gradient.

use zsslr::gradcheck::{run_all, GradCheckConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let results = run_all(&GradCheckConfig { seed: 7, ..Default::default() })?;
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} suites, {failed} failed", results.len());
    Ok(())
}
