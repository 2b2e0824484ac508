//! Trains the LLE model with momentum SGD and prints the per-epoch log.

use zsslr::data::{generate_synthetic, Split, SyntheticConfig};
use zsslr::encoders::{EncoderConfig, EncoderKind};
use zsslr::eval::{evaluate_split, percent};
use zsslr::zsl::{train_lle, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let synth = generate_synthetic(&SyntheticConfig { noise: 0.6, seed: 2, ..Default::default() })?;
    let ds = &synth.dataset;
    let encoder = EncoderConfig::new(EncoderKind::AvgPool, ds.streams());
    let config = TrainConfig { lambda: 1e-4, max_epochs: 60, patience: 10, ..Default::default() };
    let (model, log) = train_lle(ds, &encoder, &config)?;
    for e in log.epochs.iter().step_by(5) {
        println!("epoch {:>3}  loss {:.4}  val top-1 {}", e.epoch, e.train_loss, percent(e.val_top1));
    }
    println!("best epoch {} (val top-1 {}), stopped early: {}", log.best_epoch, percent(log.best_val_top1), log.stopped_early);
    let test = evaluate_split(&model, ds, Split::Test, &[1, 2, 5], false)?;
    println!("test top-1/2/5: {} {} {}", percent(test.topk[0]), percent(test.topk[1]), percent(test.topk[2]));
    Ok(())
}
