//! LSTM recurrence with cached activations and reverse-mode gradients.
//!
//! ```text
//! i, f, o = logistic(W·x_t + U·h_{t−1} + b)
//! g       = tanh(W·x_t + U·h_{t−1} + b)
//! c_t     = f∘c_{t−1} + i∘g
//! h_t     = o∘tanh(c_t)
//! ```

use super::params::LstmParams;
use super::{logistic, EncoderError};
use crate::numerics::Matrix;

#[derive(Debug, Clone)]
pub(crate) struct LstmStep {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// i, f, o, g after their nonlinearities.
    gates: [Vec<f64>; 4],
    tanh_c: Vec<f64>,
}

/// Forward activations of one LSTM pass.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    pub(crate) input: Matrix,
    pub(crate) steps: Vec<LstmStep>,
    /// `T×h` hidden states.
    pub hidden: Matrix,
    pub final_hidden: Vec<f64>,
    pub final_cell: Vec<f64>,
}

/// Gradients of one LSTM pass.
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub params: LstmParams,
    /// `T×d`, excluding any dependence of the initial state on the input.
    pub input: Matrix,
    pub initial_hidden: Vec<f64>,
    pub initial_cell: Vec<f64>,
}

fn check_shapes(params: &LstmParams, seq: &Matrix, h0: &[f64], c0: &[f64]) -> Result<(), EncoderError> {
    if !params.is_consistent() {
        return Err(EncoderError::InconsistentParams);
    }
    if seq.rows() == 0 {
        return Err(EncoderError::EmptySequence);
    }
    let (h, d) = (params.hidden(), params.input_dim());
    if seq.cols() != d {
        return Err(EncoderError::ShapeMismatch { what: "sequence width", expected: d, found: seq.cols() });
    }
    if h0.len() != h || c0.len() != h {
        return Err(EncoderError::ShapeMismatch { what: "initial state", expected: h, found: h0.len().max(c0.len()) });
    }
    Ok(())
}

/// Runs the LSTM over `seq` (`T×d`) from `(h₀, c₀)`.
pub fn lstm_forward(params: &LstmParams, seq: &Matrix, h0: &[f64], c0: &[f64]) -> Result<LstmTrace, EncoderError> {
    check_shapes(params, seq, h0, c0)?;
    let hdim = params.hidden();
    let mut h = h0.to_vec();
    let mut c = c0.to_vec();
    let mut steps = Vec::with_capacity(seq.rows());
    let mut hidden = Matrix::zeros(seq.rows(), hdim);
    for t in 0..seq.rows() {
        let x = seq.row(t);
        let pre: [Vec<f64>; 4] = std::array::from_fn(|k| params.gates[k].preactivation(x, &h));
        let gates: [Vec<f64>; 4] = std::array::from_fn(|k| {
            if k == LstmParams::CANDIDATE {
                pre[k].iter().map(|a| a.tanh()).collect()
            } else {
                pre[k].iter().map(|&a| logistic(a)).collect()
            }
        });
        let [i, f, o, g] = &gates;
        let c_new: Vec<f64> = (0..hdim).map(|j| f[j] * c[j] + i[j] * g[j]).collect();
        let tanh_c: Vec<f64> = c_new.iter().map(|v| v.tanh()).collect();
        let h_new: Vec<f64> = (0..hdim).map(|j| o[j] * tanh_c[j]).collect();
        hidden.row_mut(t).copy_from_slice(&h_new);
        steps.push(LstmStep { h_prev: h, c_prev: c, gates, tanh_c });
        h = h_new;
        c = c_new;
    }
    Ok(LstmTrace { input: seq.clone(), steps, hidden, final_hidden: h, final_cell: c })
}

/// Back-propagates `d_hidden` (`T×h`, loss gradient w.r.t. each `h_t`) and
/// `d_final_cell` through a cached forward pass.
pub fn lstm_backward(params: &LstmParams, trace: &LstmTrace, d_hidden: &Matrix, d_final_cell: &[f64]) -> Result<LstmGrads, EncoderError> {
    let (t_len, hdim, d) = (trace.steps.len(), params.hidden(), params.input_dim());
    if trace.input.cols() != d || trace.final_hidden.len() != hdim {
        return Err(EncoderError::CacheMismatch);
    }
    if d_hidden.shape() != (t_len, hdim) {
        return Err(EncoderError::ShapeMismatch { what: "hidden gradient rows", expected: t_len, found: d_hidden.rows() });
    }
    if d_final_cell.len() != hdim {
        return Err(EncoderError::ShapeMismatch { what: "cell gradient", expected: hdim, found: d_final_cell.len() });
    }
    let mut grads = LstmParams::zeros(hdim, d);
    let mut d_input = Matrix::zeros(t_len, d);
    let mut dh_next = vec![0.0; hdim];
    let mut dc_next = d_final_cell.to_vec();
    for t in (0..t_len).rev() {
        let step = &trace.steps[t];
        let [i, f, o, g] = &step.gates;
        let dh: Vec<f64> = d_hidden.row(t).iter().zip(&dh_next).map(|(a, b)| a + b).collect();
        let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; hdim]);
        for j in 0..hdim {
            let tc = step.tanh_c[j];
            let d_o = dh[j] * tc;
            let dc = dc_next[j] + dh[j] * o[j] * (1.0 - tc * tc);
            da[LstmParams::OUTPUT][j] = d_o * o[j] * (1.0 - o[j]);
            da[LstmParams::INPUT][j] = dc * g[j] * i[j] * (1.0 - i[j]);
            da[LstmParams::CANDIDATE][j] = dc * i[j] * (1.0 - g[j] * g[j]);
            da[LstmParams::FORGET][j] = dc * step.c_prev[j] * f[j] * (1.0 - f[j]);
            dc_next[j] = dc * f[j];
        }
        let x = trace.input.row(t);
        let mut dh_prev = vec![0.0; hdim];
        let dx = d_input.row_mut(t);
        for ((acc, gate), da_k) in grads.gates.iter_mut().zip(&params.gates).zip(&da) {
            acc.accumulate(da_k, x, &step.h_prev);
            for (r, &a) in da_k.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                crate::numerics::axpy(a, gate.recurrent.row(r), &mut dh_prev);
                crate::numerics::axpy(a, gate.input.row(r), dx);
            }
        }
        dh_next = dh_prev;
    }
    Ok(LstmGrads { params: grads, input: d_input, initial_hidden: dh_next, initial_cell: dc_next })
}
