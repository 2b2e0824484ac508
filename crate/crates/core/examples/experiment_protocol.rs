//! The repeated-run protocol: every model on a two-stream synthetic set,
//! rendered as the report table and CSV.

use zsslr::data::{generate_synthetic, Stream, SyntheticConfig};
use zsslr::encoders::{EncoderConfig, EncoderKind};
use zsslr::eval::{format_report, run_experiment, ExperimentConfig};
use zsslr::zsl::{ModelKind, ModelSpec, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let streams = vec![Stream::Body, Stream::Hand];
    let synth = generate_synthetic(&SyntheticConfig { streams: streams.clone(), noise: 0.1, seed: 9, ..Default::default() })?;
    let config = ExperimentConfig { runs: 3, ..Default::default() };
    let mut reports = Vec::new();
    for kind in ModelKind::ALL {
        for s in [vec![Stream::Body], streams.clone()] {
            let lambda = match kind {
                ModelKind::Lle => 1e-4,
                ModelKind::Eszsl => 1e-3,
                ModelKind::Sae => 1.0,
            };
            let spec = ModelSpec {
                kind,
                encoder: EncoderConfig::new(EncoderKind::AvgPool, &s),
                train: TrainConfig { lambda, ..Default::default() },
            };
            reports.push(run_experiment(&synth.dataset, &spec, &config)?);
        }
    }
    let out = format_report(&reports)?;
    print!("{}\n{}", out.text, out.csv);
    Ok(())
}
