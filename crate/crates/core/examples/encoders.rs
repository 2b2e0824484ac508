//! Encodes one synthetic video with every encoder kind and both readouts.

use zsslr::data::{generate_synthetic, Stream, SyntheticConfig};
use zsslr::encoders::{Encoder, EncoderConfig, EncoderKind, InitialState, Readout};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let streams = [Stream::Body, Stream::Hand];
    let synth = generate_synthetic(&SyntheticConfig { feature_dim: 8, embedding_dim: 4, streams: streams.to_vec(), ..Default::default() })?;
    let video = &synth.dataset.videos()[0];
    println!("video {} with {} snippets per stream", video.id, video.len());

    for kind in [EncoderKind::AvgPool, EncoderKind::Lstm, EncoderKind::Gru, EncoderKind::BiLstm] {
        let readouts: &[Readout] = if kind.is_recurrent() { &[Readout::Final, Readout::Mean] } else { &[Readout::Final] };
        for &readout in readouts {
            let mut config = EncoderConfig::new(kind, &streams);
            config.hidden = Some(6);
            config.readout = readout;
            config.initial_state = InitialState::Zero;
            let encoder = Encoder::new(config, 8, 0)?;
            let theta = encoder.encode(video)?;
            let head: Vec<String> = theta.iter().take(4).map(|v| format!("{v:+.3}")).collect();
            println!(
                "{:<8} {:<6} dim {:>2}  params {:>4}  theta[..4] = [{}]",
                kind.to_string(),
                format!("{readout:?}").to_lowercase(),
                theta.len(),
                encoder.params().num_params(),
                head.join(", ")
            );
        }
    }
    Ok(())
}
