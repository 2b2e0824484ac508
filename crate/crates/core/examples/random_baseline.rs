//! Chance-level top-k accuracy, analytic and Monte-Carlo.

use zsslr::eval::{percent, random_baseline};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in [30, 50] {
        let b = random_baseline(n, &[1, 2, 5], 10_000, 0)?;
        for e in &b.entries {
            println!("N = {n}  top-{}  analytic {:>5}  monte carlo {:>5}", e.k, percent(e.analytic), percent(e.monte_carlo));
        }
    }
    Ok(())
}
