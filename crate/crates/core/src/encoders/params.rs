use rand::Rng;

use crate::numerics::Matrix;

/// Weights of one gate: `a = W·x + U·h + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    /// `h×d`
    pub input: Matrix,
    /// `h×h`
    pub recurrent: Matrix,
    /// `h`
    pub bias: Vec<f64>,
}

impl GateParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        Self { input: Matrix::zeros(hidden, input), recurrent: Matrix::zeros(hidden, hidden), bias: vec![0.0; hidden] }
    }

    /// Weights uniform in `(−1/√h, 1/√h)`, bias set to `bias`.
    pub fn init(rng: &mut impl Rng, hidden: usize, input: usize, bias: f64) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut draw = |r, c| Matrix::from_fn(r, c, |_, _| rng.random_range(-bound..bound));
        let input_w = draw(hidden, input);
        let recurrent = draw(hidden, hidden);
        Self { input: input_w, recurrent, bias: vec![bias; hidden] }
    }

    pub fn hidden(&self) -> usize {
        self.bias.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input.cols()
    }

    /// `W·x + U·h + b`.
    pub(crate) fn preactivation(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut a = self.bias.clone();
        for (i, ai) in a.iter_mut().enumerate() {
            *ai += crate::numerics::dot(self.input.row(i), x) + crate::numerics::dot(self.recurrent.row(i), h);
        }
        a
    }

    /// Accumulates `da·xᵀ`, `da·hᵀ` and `da` into this gradient.
    pub(crate) fn accumulate(&mut self, da: &[f64], x: &[f64], h: &[f64]) {
        for (i, &g) in da.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            crate::numerics::axpy(g, x, self.input.row_mut(i));
            crate::numerics::axpy(g, h, self.recurrent.row_mut(i));
            self.bias[i] += g;
        }
    }

    fn check(&self, hidden: usize, input: usize) -> bool {
        self.input.shape() == (hidden, input) && self.recurrent.shape() == (hidden, hidden) && self.bias.len() == hidden
    }

    fn slices(&self) -> [&[f64]; 3] {
        [self.input.values(), self.recurrent.values(), &self.bias]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [self.input.values_mut(), self.recurrent.values_mut(), &mut self.bias]
    }
}

/// LSTM gates in the order input, forget, output, candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub gates: [GateParams; 4],
}

impl LstmParams {
    pub const INPUT: usize = 0;
    pub const FORGET: usize = 1;
    pub const OUTPUT: usize = 2;
    pub const CANDIDATE: usize = 3;

    pub fn zeros(hidden: usize, input: usize) -> Self {
        Self { gates: std::array::from_fn(|_| GateParams::zeros(hidden, input)) }
    }

    /// Forget-gate bias starts at 1, other biases at 0.
    pub fn init(rng: &mut impl Rng, hidden: usize, input: usize) -> Self {
        Self { gates: std::array::from_fn(|k| GateParams::init(rng, hidden, input, if k == Self::FORGET { 1.0 } else { 0.0 })) }
    }

    pub fn hidden(&self) -> usize {
        self.gates[0].hidden()
    }

    pub fn input_dim(&self) -> usize {
        self.gates[0].input_dim()
    }

    pub fn is_consistent(&self) -> bool {
        let (h, d) = (self.hidden(), self.input_dim());
        self.gates.iter().all(|g| g.check(h, d))
    }
}

/// GRU gates in the order update, reset, candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub gates: [GateParams; 3],
}

impl GruParams {
    pub const UPDATE: usize = 0;
    pub const RESET: usize = 1;
    pub const CANDIDATE: usize = 2;

    pub fn zeros(hidden: usize, input: usize) -> Self {
        Self { gates: std::array::from_fn(|_| GateParams::zeros(hidden, input)) }
    }

    pub fn init(rng: &mut impl Rng, hidden: usize, input: usize) -> Self {
        Self { gates: std::array::from_fn(|_| GateParams::init(rng, hidden, input, 0.0)) }
    }

    pub fn hidden(&self) -> usize {
        self.gates[0].hidden()
    }

    pub fn input_dim(&self) -> usize {
        self.gates[0].input_dim()
    }

    pub fn is_consistent(&self) -> bool {
        let (h, d) = (self.hidden(), self.input_dim());
        self.gates.iter().all(|g| g.check(h, d))
    }
}

/// Parameters of one stream's encoder.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum StreamParams {
    AvgPool,
    Lstm(LstmParams),
    Gru(GruParams),
    BiLstm { forward: LstmParams, backward: LstmParams },
}

impl StreamParams {
    pub fn gates(&self) -> Vec<&GateParams> {
        match self {
            StreamParams::AvgPool => Vec::new(),
            StreamParams::Lstm(p) => p.gates.iter().collect(),
            StreamParams::Gru(p) => p.gates.iter().collect(),
            StreamParams::BiLstm { forward, backward } => forward.gates.iter().chain(backward.gates.iter()).collect(),
        }
    }

    pub fn gates_mut(&mut self) -> Vec<&mut GateParams> {
        match self {
            StreamParams::AvgPool => Vec::new(),
            StreamParams::Lstm(p) => p.gates.iter_mut().collect(),
            StreamParams::Gru(p) => p.gates.iter_mut().collect(),
            StreamParams::BiLstm { forward, backward } => forward.gates.iter_mut().chain(backward.gates.iter_mut()).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        match self {
            StreamParams::AvgPool => StreamParams::AvgPool,
            StreamParams::Lstm(p) => StreamParams::Lstm(LstmParams::zeros(p.hidden(), p.input_dim())),
            StreamParams::Gru(p) => StreamParams::Gru(GruParams::zeros(p.hidden(), p.input_dim())),
            StreamParams::BiLstm { forward, backward } => StreamParams::BiLstm {
                forward: LstmParams::zeros(forward.hidden(), forward.input_dim()),
                backward: LstmParams::zeros(backward.hidden(), backward.input_dim()),
            },
        }
    }
}

/// Independent parameters per stream, in stream order.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub streams: Vec<(crate::data::Stream, StreamParams)>,
}

impl EncoderParams {
    pub fn get(&self, stream: crate::data::Stream) -> Option<&StreamParams> {
        self.streams.iter().find(|(s, _)| *s == stream).map(|(_, p)| p)
    }

    pub fn zeros_like(&self) -> Self {
        Self { streams: self.streams.iter().map(|(s, p)| (*s, p.zeros_like())).collect() }
    }

    pub fn num_params(&self) -> usize {
        self.streams.iter().flat_map(|(_, p)| p.gates()).flat_map(|g| g.slices()).map(<[f64]>::len).sum()
    }

    /// All parameters in a fixed order (stream, gate, input/recurrent/bias).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (_, p) in &self.streams {
            for g in p.gates() {
                for s in g.slices() {
                    out.extend_from_slice(s);
                }
            }
        }
        out
    }

    /// Inverse of [`to_flat`](Self::to_flat).
    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut pos = 0;
        for (_, p) in &mut self.streams {
            for g in p.gates_mut() {
                for s in g.slices_mut() {
                    s.copy_from_slice(&flat[pos..pos + s.len()]);
                    pos += s.len();
                }
            }
        }
    }

    /// `self += alpha · other`; shapes must match.
    pub fn add_scaled(&mut self, alpha: f64, other: &EncoderParams) {
        for ((_, a), (_, b)) in self.streams.iter_mut().zip(&other.streams) {
            for (ga, gb) in a.gates_mut().into_iter().zip(b.gates()) {
                for (sa, sb) in ga.slices_mut().into_iter().zip(gb.slices()) {
                    crate::numerics::axpy(alpha, sb, sa);
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.streams.iter().flat_map(|(_, p)| p.gates()).flat_map(|g| g.slices()).all(|s| s.iter().all(|v| v.is_finite()))
    }
}
