//! Fits LLE, ESZSL and SAE on planted synthetic data at two noise levels and
//! prints test top-1 next to the planted-matrix oracle.

use std::time::Instant;

use zsslr::data::{generate_synthetic, Split, SyntheticConfig};
use zsslr::encoders::{Encoder, EncoderConfig, EncoderKind};
use zsslr::eval::{evaluate_split, percent};
use zsslr::zsl::{fit_model, CompatibilityModel, ModelKind, ModelSpec, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for noise in [0.0, 0.05] {
        let synth = generate_synthetic(&SyntheticConfig { noise, seed: 1, ..Default::default() })?;
        let ds = &synth.dataset;
        let encoder = EncoderConfig::new(EncoderKind::AvgPool, ds.streams());
        let oracle =
            CompatibilityModel::new(ModelKind::Lle, synth.planting.clone(), Encoder::new(encoder.clone(), ds.feature_dim(), 0)?, false)?;
        let top1 = evaluate_split(&oracle, ds, Split::Test, &[1], false)?.topk[0];
        println!("sigma = {noise}: planted oracle test top-1 {}", percent(top1));
        for kind in ModelKind::ALL {
            let train = TrainConfig {
                lambda: match kind {
                    ModelKind::Lle => 1e-4,
                    ModelKind::Eszsl => 1e-3,
                    ModelKind::Sae => 1.0,
                },
                ..Default::default()
            };
            let spec = ModelSpec { kind, encoder: encoder.clone(), train };
            let start = Instant::now();
            let (model, log) = fit_model(ds, &spec)?;
            let val = evaluate_split(&model, ds, Split::Val, &[1], false)?.topk[0];
            let test = evaluate_split(&model, ds, Split::Test, &[1, 2, 5], false)?.topk;
            let epochs = log.map(|l| format!(", {} epochs (best {})", l.epochs.len(), l.best_epoch)).unwrap_or_default();
            println!(
                "  {:<6} val top-1 {:>5}  test top-1/2/5 {} {} {}  ({:.2?}{epochs})",
                kind.label(),
                percent(val),
                percent(test[0]),
                percent(test[1]),
                percent(test[2]),
                start.elapsed()
            );
        }
    }
    Ok(())
}
