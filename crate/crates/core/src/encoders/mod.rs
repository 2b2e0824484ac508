//! Temporal encoders: snippet-feature sequences to a fixed video embedding.
//!
//! Each stream is encoded independently with its own parameters and the
//! per-stream embeddings are concatenated in stream order (body, then hand).
//! Recurrent encoders start from the average-pooled sequence by default, which
//! requires `hidden == feature_dim`, and read out the final hidden state.

mod gru;
mod lstm;
mod params;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Stream, VideoRecord};
use crate::numerics::{Matrix, Vector};
use crate::rng::{stream_rng, Domain};

pub use gru::{gru_backward, gru_forward, GruGrads, GruTrace};
pub use lstm::{lstm_backward, lstm_forward, LstmGrads, LstmTrace};
pub use params::{EncoderParams, GateParams, GruParams, LstmParams, StreamParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncoderError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("{what}: expected {expected}, found {found}")]
    ShapeMismatch { what: &'static str, expected: usize, found: usize },
    #[error("video {video:?} has no {stream} stream")]
    MissingStream { video: String, stream: Stream },
    #[error("recurrent parameters have inconsistent shapes")]
    InconsistentParams,
    #[error("forward cache does not belong to this encoder")]
    CacheMismatch,
    #[error("invalid encoder configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    #[serde(alias = "avg", alias = "average")]
    AvgPool,
    Lstm,
    Gru,
    #[serde(alias = "bi-lstm")]
    BiLstm,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 4] = [EncoderKind::AvgPool, EncoderKind::Lstm, EncoderKind::Gru, EncoderKind::BiLstm];

    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::AvgPool => "avgpool",
            EncoderKind::Lstm => "lstm",
            EncoderKind::Gru => "gru",
            EncoderKind::BiLstm => "bilstm",
        }
    }

    pub fn is_recurrent(self) -> bool {
        self != EncoderKind::AvgPool
    }
}

impl std::fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EncoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "avgpool" | "avg" | "average" => Ok(EncoderKind::AvgPool),
            "lstm" => Ok(EncoderKind::Lstm),
            "gru" => Ok(EncoderKind::Gru),
            "bilstm" | "bi-lstm" => Ok(EncoderKind::BiLstm),
            other => Err(format!("unknown encoder {other:?} (expected avgpool, lstm, gru or bilstm)")),
        }
    }
}

/// How a recurrent hidden sequence becomes one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    #[default]
    Final,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `h₀ = c₀ = average_pool(seq)`; needs `hidden == feature_dim`.
    #[default]
    AveragePool,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    /// Recurrent hidden size; `None` means the feature width.
    pub hidden: Option<usize>,
    pub streams: Vec<Stream>,
    pub readout: Readout,
    pub initial_state: InitialState,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            kind: EncoderKind::AvgPool,
            hidden: None,
            streams: vec![Stream::Body],
            readout: Readout::Final,
            initial_state: InitialState::AveragePool,
        }
    }
}

impl EncoderConfig {
    pub fn new(kind: EncoderKind, streams: &[Stream]) -> Self {
        Self { kind, streams: Stream::canonical(streams), ..Self::default() }
    }

    pub fn hidden_size(&self, feature_dim: usize) -> usize {
        self.hidden.unwrap_or(feature_dim)
    }

    /// Width of one stream's embedding.
    pub fn stream_dim(&self, feature_dim: usize) -> usize {
        match self.kind {
            EncoderKind::AvgPool => feature_dim,
            EncoderKind::Lstm | EncoderKind::Gru => self.hidden_size(feature_dim),
            EncoderKind::BiLstm => 2 * self.hidden_size(feature_dim),
        }
    }

    pub fn output_dim(&self, feature_dim: usize) -> usize {
        Stream::canonical(&self.streams).len() * self.stream_dim(feature_dim)
    }

    fn check(&self, feature_dim: usize) -> Result<(), EncoderError> {
        if self.streams.is_empty() {
            return Err(EncoderError::InvalidConfig("no streams selected".into()));
        }
        if feature_dim == 0 {
            return Err(EncoderError::InvalidConfig("feature width must be at least 1".into()));
        }
        if self.kind.is_recurrent() {
            let h = self.hidden_size(feature_dim);
            if h == 0 {
                return Err(EncoderError::InvalidConfig("hidden size must be at least 1".into()));
            }
            if self.initial_state == InitialState::AveragePool && h != feature_dim {
                return Err(EncoderError::InvalidConfig(format!(
                    "average-pool initial state needs hidden == feature width ({h} != {feature_dim}); use initial_state = \"zero\""
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn logistic(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Mean over the time axis.
pub fn average_pool(seq: &Matrix) -> Result<Vector, EncoderError> {
    if seq.rows() == 0 {
        return Err(EncoderError::EmptySequence);
    }
    let mut sum = vec![0.0; seq.cols()];
    for r in seq.row_iter() {
        crate::numerics::axpy(1.0, r, &mut sum);
    }
    let t = seq.rows() as f64;
    Ok(Vector::from_raw(sum.into_iter().map(|s| s / t).collect()))
}

/// Bi-directional LSTM with both directions started from `average_pool(seq)`;
/// returns `[h_T^fwd ; h_T^bwd]`.
pub fn bilstm_encode(forward: &LstmParams, backward: &LstmParams, seq: &Matrix) -> Result<Vec<f64>, EncoderError> {
    if forward.hidden() != backward.hidden() {
        return Err(EncoderError::ShapeMismatch { what: "backward hidden size", expected: forward.hidden(), found: backward.hidden() });
    }
    let init = average_pool(seq)?;
    if init.dim() != forward.hidden() {
        return Err(EncoderError::ShapeMismatch {
            what: "hidden size (must equal feature width)",
            expected: init.dim(),
            found: forward.hidden(),
        });
    }
    let fwd = lstm_forward(forward, seq, &init, &init)?;
    let bwd = lstm_forward(backward, &seq.reversed_rows(), &init, &init)?;
    let mut out = fwd.final_hidden;
    out.extend(bwd.final_hidden);
    Ok(out)
}

#[derive(Debug, Clone)]
enum StreamTrace {
    AvgPool { len: usize },
    Lstm(LstmTrace),
    Gru(GruTrace),
    BiLstm { forward: LstmTrace, backward: LstmTrace },
}

/// Cached forward pass of [`Encoder::forward`].
#[derive(Debug, Clone)]
pub struct EncoderTrace {
    pub output: Vec<f64>,
    streams: Vec<(Stream, StreamTrace)>,
}

/// Gradients from [`Encoder::backward`].
#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub params: EncoderParams,
    /// Gradient w.r.t. each stream's `T×d` input, including the path through
    /// the average-pooled initial state.
    pub inputs: Vec<(Stream, Matrix)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    config: EncoderConfig,
    feature_dim: usize,
    params: EncoderParams,
}

impl Encoder {
    /// Initializes parameters (uniform `±1/√h`, forget bias 1) from `seed`.
    pub fn new(config: EncoderConfig, feature_dim: usize, seed: u64) -> Result<Self, EncoderError> {
        let config = EncoderConfig { streams: Stream::canonical(&config.streams), ..config };
        config.check(feature_dim)?;
        let h = config.hidden_size(feature_dim);
        let d = feature_dim;
        let streams = config
            .streams
            .iter()
            .enumerate()
            .map(|(si, &s)| {
                let mut rng = stream_rng(seed, Domain::EncoderInit, 2 * si as u64);
                let p = match config.kind {
                    EncoderKind::AvgPool => StreamParams::AvgPool,
                    EncoderKind::Lstm => StreamParams::Lstm(LstmParams::init(&mut rng, h, d)),
                    EncoderKind::Gru => StreamParams::Gru(GruParams::init(&mut rng, h, d)),
                    EncoderKind::BiLstm => {
                        let forward = LstmParams::init(&mut rng, h, d);
                        let mut rng_b = stream_rng(seed, Domain::EncoderInit, 2 * si as u64 + 1);
                        StreamParams::BiLstm { forward, backward: LstmParams::init(&mut rng_b, h, d) }
                    }
                };
                (s, p)
            })
            .collect();
        Ok(Self { config, feature_dim, params: EncoderParams { streams } })
    }

    /// Wraps existing parameters after checking them against `config`.
    pub fn from_parts(config: EncoderConfig, feature_dim: usize, params: EncoderParams) -> Result<Self, EncoderError> {
        let config = EncoderConfig { streams: Stream::canonical(&config.streams), ..config };
        config.check(feature_dim)?;
        let h = config.hidden_size(feature_dim);
        let streams: Vec<Stream> = params.streams.iter().map(|(s, _)| *s).collect();
        if streams != config.streams {
            return Err(EncoderError::InvalidConfig("parameter streams do not match the configuration".into()));
        }
        let lstm_ok = |p: &LstmParams| p.is_consistent() && p.hidden() == h && p.input_dim() == feature_dim;
        for (_, p) in &params.streams {
            let ok = match (config.kind, p) {
                (EncoderKind::AvgPool, StreamParams::AvgPool) => true,
                (EncoderKind::Lstm, StreamParams::Lstm(p)) => lstm_ok(p),
                (EncoderKind::Gru, StreamParams::Gru(p)) => p.is_consistent() && p.hidden() == h && p.input_dim() == feature_dim,
                (EncoderKind::BiLstm, StreamParams::BiLstm { forward, backward }) => lstm_ok(forward) && lstm_ok(backward),
                _ => false,
            };
            if !ok {
                return Err(EncoderError::InconsistentParams);
            }
        }
        Ok(Self { config, feature_dim, params })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim(self.feature_dim)
    }

    pub fn params(&self) -> &EncoderParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut EncoderParams {
        &mut self.params
    }

    pub fn has_params(&self) -> bool {
        self.config.kind.is_recurrent()
    }

    fn initial_state(&self, seq: &Matrix) -> Result<Vec<f64>, EncoderError> {
        match self.config.initial_state {
            InitialState::AveragePool => Ok(average_pool(seq)?.into_inner()),
            InitialState::Zero => Ok(vec![0.0; self.config.hidden_size(self.feature_dim)]),
        }
    }

    fn readout(&self, hidden: &Matrix, last: &[f64]) -> Vec<f64> {
        match self.config.readout {
            Readout::Final => last.to_vec(),
            Readout::Mean => average_pool(hidden).map(Vector::into_inner).unwrap_or_default(),
        }
    }

    fn readout_grad(&self, t_len: usize, upstream: &[f64]) -> Matrix {
        let mut d = Matrix::zeros(t_len, upstream.len());
        match self.config.readout {
            Readout::Final => d.row_mut(t_len - 1).copy_from_slice(upstream),
            Readout::Mean => {
                let scale = 1.0 / t_len as f64;
                for t in 0..t_len {
                    for (o, u) in d.row_mut(t).iter_mut().zip(upstream) {
                        *o = u * scale;
                    }
                }
            }
        }
        d
    }

    fn sequence<'v>(&self, video: &'v VideoRecord, stream: Stream) -> Result<&'v Matrix, EncoderError> {
        let seq = video.sequence(stream).ok_or_else(|| EncoderError::MissingStream { video: video.id.clone(), stream })?;
        if seq.rows() == 0 {
            return Err(EncoderError::EmptySequence);
        }
        if seq.cols() != self.feature_dim {
            return Err(EncoderError::ShapeMismatch { what: "sequence width", expected: self.feature_dim, found: seq.cols() });
        }
        Ok(seq)
    }

    /// `θ(v)`.
    pub fn encode(&self, video: &VideoRecord) -> Result<Vec<f64>, EncoderError> {
        Ok(self.forward(video)?.output)
    }

    pub fn forward(&self, video: &VideoRecord) -> Result<EncoderTrace, EncoderError> {
        let mut output = Vec::with_capacity(self.output_dim());
        let mut traces = Vec::with_capacity(self.params.streams.len());
        for (stream, p) in &self.params.streams {
            let seq = self.sequence(video, *stream)?;
            let trace = match p {
                StreamParams::AvgPool => {
                    output.extend_from_slice(&average_pool(seq)?);
                    StreamTrace::AvgPool { len: seq.rows() }
                }
                StreamParams::Lstm(lp) => {
                    let init = self.initial_state(seq)?;
                    let tr = lstm_forward(lp, seq, &init, &init)?;
                    output.extend(self.readout(&tr.hidden, &tr.final_hidden));
                    StreamTrace::Lstm(tr)
                }
                StreamParams::Gru(gp) => {
                    let init = self.initial_state(seq)?;
                    let tr = gru_forward(gp, seq, &init)?;
                    output.extend(self.readout(&tr.hidden, &tr.final_hidden));
                    StreamTrace::Gru(tr)
                }
                StreamParams::BiLstm { forward, backward } => {
                    let init = self.initial_state(seq)?;
                    let f = lstm_forward(forward, seq, &init, &init)?;
                    let b = lstm_forward(backward, &seq.reversed_rows(), &init, &init)?;
                    output.extend(self.readout(&f.hidden, &f.final_hidden));
                    output.extend(self.readout(&b.hidden, &b.final_hidden));
                    StreamTrace::BiLstm { forward: f, backward: b }
                }
            };
            traces.push((*stream, trace));
        }
        Ok(EncoderTrace { output, streams: traces })
    }

    /// Reverse-mode gradients of `upstreamᵀ·θ(v)` w.r.t. parameters and inputs.
    pub fn backward(&self, trace: &EncoderTrace, upstream: &[f64]) -> Result<EncoderGrads, EncoderError> {
        if upstream.len() != self.output_dim() {
            return Err(EncoderError::ShapeMismatch { what: "upstream gradient", expected: self.output_dim(), found: upstream.len() });
        }
        if trace.streams.len() != self.params.streams.len() || trace.output.len() != self.output_dim() {
            return Err(EncoderError::CacheMismatch);
        }
        let width = self.config.stream_dim(self.feature_dim);
        let pooled_init = self.config.initial_state == InitialState::AveragePool;
        let mut grads = self.params.zeros_like();
        let mut inputs = Vec::with_capacity(trace.streams.len());
        for (si, ((stream, p), (tstream, st))) in self.params.streams.iter().zip(&trace.streams).enumerate() {
            if stream != tstream {
                return Err(EncoderError::CacheMismatch);
            }
            let up = &upstream[si * width..(si + 1) * width];
            let g = &mut grads.streams[si].1;
            let dx = match (p, st, g) {
                (StreamParams::AvgPool, StreamTrace::AvgPool { len }, _) => {
                    let scale = 1.0 / *len as f64;
                    Matrix::from_fn(*len, up.len(), |_, j| up[j] * scale)
                }
                (StreamParams::Lstm(lp), StreamTrace::Lstm(tr), StreamParams::Lstm(gp)) => {
                    let lg = lstm_backward(lp, tr, &self.readout_grad(tr.steps.len(), up), &vec![0.0; lp.hidden()])?;
                    *gp = lg.params;
                    let mut dx = lg.input;
                    if pooled_init {
                        add_pooled_init_grad(&mut dx, &lg.initial_hidden, &lg.initial_cell);
                    }
                    dx
                }
                (StreamParams::Gru(gp), StreamTrace::Gru(tr), StreamParams::Gru(gg)) => {
                    let rg = gru_backward(gp, tr, &self.readout_grad(tr.steps.len(), up))?;
                    *gg = rg.params;
                    let mut dx = rg.input;
                    if pooled_init {
                        add_pooled_init_grad(&mut dx, &rg.initial_hidden, &[]);
                    }
                    dx
                }
                (
                    StreamParams::BiLstm { forward, backward },
                    StreamTrace::BiLstm { forward: tf, backward: tb },
                    StreamParams::BiLstm { forward: gf, backward: gb },
                ) => {
                    let h = forward.hidden();
                    let zero_c = vec![0.0; h];
                    let fg = lstm_backward(forward, tf, &self.readout_grad(tf.steps.len(), &up[..h]), &zero_c)?;
                    let bg = lstm_backward(backward, tb, &self.readout_grad(tb.steps.len(), &up[h..]), &zero_c)?;
                    *gf = fg.params;
                    *gb = bg.params;
                    let mut dx = fg.input;
                    dx.add_scaled(1.0, &bg.input.reversed_rows()).map_err(|_| EncoderError::CacheMismatch)?;
                    if pooled_init {
                        add_pooled_init_grad(&mut dx, &fg.initial_hidden, &fg.initial_cell);
                        add_pooled_init_grad(&mut dx, &bg.initial_hidden, &bg.initial_cell);
                    }
                    dx
                }
                _ => return Err(EncoderError::CacheMismatch),
            };
            inputs.push((*stream, dx));
        }
        Ok(EncoderGrads { params: grads, inputs })
    }
}

/// `h₀ = c₀ = mean_t x_t`, so each `x_t` receives `(dh₀ + dc₀)/T`.
fn add_pooled_init_grad(dx: &mut Matrix, dh0: &[f64], dc0: &[f64]) {
    let scale = 1.0 / dx.rows() as f64;
    for t in 0..dx.rows() {
        let row = dx.row_mut(t);
        crate::numerics::axpy(scale, dh0, row);
        if !dc0.is_empty() {
            crate::numerics::axpy(scale, dc0, row);
        }
    }
}

/// `θ(v)` under `encoder`.
pub fn encode_video(encoder: &Encoder, video: &VideoRecord) -> Result<Vec<f64>, EncoderError> {
    encoder.encode(video)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn video(body: Matrix, hand: Option<Matrix>) -> VideoRecord {
        let mut streams = BTreeMap::from([(Stream::Body, body)]);
        if let Some(h) = hand {
            streams.insert(Stream::Hand, h);
        }
        VideoRecord { id: "v".into(), class: crate::data::ClassId(0), streams }
    }

    #[test]
    fn average_pool_examples() {
        let u = [0.5, -2.0, 3.0];
        let seq = Matrix::from_fn(4, 3, |_, j| u[j]);
        assert_eq!(average_pool(&seq).unwrap().as_slice(), &u);
        let seq = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(average_pool(&seq).unwrap().as_slice(), &[0.5, 0.5]);
        assert!(matches!(average_pool(&Matrix::zeros(0, 2)), Err(EncoderError::EmptySequence)));
    }

    #[test]
    fn avgpool_two_stream_concatenation_order() {
        let body = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let hand = Matrix::from_rows(&[[10.0, 20.0], [30.0, 40.0]]).unwrap();
        let v = video(body.clone(), Some(hand));
        let enc = Encoder::new(EncoderConfig::new(EncoderKind::AvgPool, &[Stream::Hand, Stream::Body]), 2, 0).unwrap();
        assert_eq!(enc.encode(&v).unwrap(), vec![2.0, 3.0, 20.0, 30.0]);
        let body_only = Encoder::new(EncoderConfig::new(EncoderKind::AvgPool, &[Stream::Body]), 2, 0).unwrap();
        assert_eq!(encode_video(&body_only, &v).unwrap(), average_pool(&body).unwrap().into_inner());
    }

    #[test]
    fn avgpool_input_gradient_is_broadcast() {
        let v = video(Matrix::from_fn(4, 3, |i, j| (i + j) as f64), None);
        let enc = Encoder::new(EncoderConfig::new(EncoderKind::AvgPool, &[Stream::Body]), 3, 0).unwrap();
        let tr = enc.forward(&v).unwrap();
        let g = enc.backward(&tr, &[4.0, -8.0, 2.0]).unwrap();
        assert_eq!(g.inputs[0].1, Matrix::from_fn(4, 3, |_, j| [1.0, -2.0, 0.5][j]));
        assert_eq!(g.params.num_params(), 0);
    }

    #[test]
    fn missing_stream_is_an_error() {
        let v = video(Matrix::zeros(2, 2), None);
        let enc = Encoder::new(EncoderConfig::new(EncoderKind::Lstm, &[Stream::Body, Stream::Hand]), 2, 0).unwrap();
        assert!(matches!(enc.encode(&v), Err(EncoderError::MissingStream { stream: Stream::Hand, .. })));
    }

    #[test]
    fn pooled_init_requires_matching_hidden() {
        let cfg = EncoderConfig { hidden: Some(4), ..EncoderConfig::new(EncoderKind::Lstm, &[Stream::Body]) };
        assert!(matches!(Encoder::new(cfg.clone(), 3, 0), Err(EncoderError::InvalidConfig(_))));
        let zero = EncoderConfig { initial_state: InitialState::Zero, ..cfg };
        assert_eq!(Encoder::new(zero, 3, 0).unwrap().output_dim(), 4);
    }

    #[test]
    fn output_dims() {
        for (kind, per_stream) in [(EncoderKind::AvgPool, 5), (EncoderKind::Lstm, 5), (EncoderKind::Gru, 5), (EncoderKind::BiLstm, 10)] {
            let enc = Encoder::new(EncoderConfig::new(kind, &[Stream::Body, Stream::Hand]), 5, 1).unwrap();
            assert_eq!(enc.output_dim(), 2 * per_stream);
            let v = video(Matrix::filled(3, 5, 0.1), Some(Matrix::filled(3, 5, -0.1)));
            assert_eq!(enc.encode(&v).unwrap().len(), 2 * per_stream);
        }
    }

    #[test]
    fn bilstm_zero_params_give_zero() {
        // The initial state is the sequence mean, so zero output needs a zero-mean sequence.
        let p = LstmParams::zeros(3, 3);
        let seq = Matrix::from_rows(&[[1.0, -2.0, 0.5], [-1.0, 2.0, 0.5], [0.5, 0.0, -1.0], [-0.5, 0.0, 0.0]]).unwrap();
        assert_eq!(bilstm_encode(&p, &p, &seq).unwrap(), vec![0.0; 6]);
    }

    #[test]
    fn bilstm_palindrome_halves_match() {
        let mut rng = stream_rng(9, Domain::GradCheck, 0);
        let p = LstmParams::init(&mut rng, 3, 3);
        let seq = Matrix::from_rows(&[[0.1, 0.2, 0.3], [-0.5, 0.4, 0.0], [0.9, -0.1, 0.2], [-0.5, 0.4, 0.0], [0.1, 0.2, 0.3]]).unwrap();
        let out = bilstm_encode(&p, &p, &seq).unwrap();
        assert_eq!(out[..3], out[3..]);
    }

    #[test]
    fn encode_is_deterministic() {
        let enc = Encoder::new(EncoderConfig::new(EncoderKind::BiLstm, &[Stream::Body]), 4, 12).unwrap();
        let again = Encoder::new(EncoderConfig::new(EncoderKind::BiLstm, &[Stream::Body]), 4, 12).unwrap();
        assert_eq!(enc, again);
        let v = video(Matrix::from_fn(5, 4, |i, j| ((i * j) as f64).sin()), None);
        let a = enc.encode(&v).unwrap();
        let b = enc.encode(&v).unwrap();
        assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn flat_round_trip() {
        let enc = Encoder::new(EncoderConfig::new(EncoderKind::Gru, &[Stream::Body, Stream::Hand]), 3, 2).unwrap();
        let flat = enc.params().to_flat();
        assert_eq!(flat.len(), 2 * 3 * (9 + 9 + 3));
        let mut p = enc.params().zeros_like();
        p.set_flat(&flat);
        assert_eq!(&p, enc.params());
    }
}
