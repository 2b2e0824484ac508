//! GRU recurrence (reset applied before the recurrent product):
//!
//! ```text
//! z = logistic(W_z·x + U_z·h + b_z)
//! r = logistic(W_r·x + U_r·h + b_r)
//! n = tanh(W_n·x + U_n·(r∘h) + b_n)
//! h' = (1 − z)∘n + z∘h
//! ```

use super::params::GruParams;
use super::{logistic, EncoderError};
use crate::numerics::{axpy, Matrix};

#[derive(Debug, Clone)]
pub(crate) struct GruStep {
    h_prev: Vec<f64>,
    reset_h: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GruTrace {
    pub(crate) input: Matrix,
    pub(crate) steps: Vec<GruStep>,
    pub hidden: Matrix,
    pub final_hidden: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GruGrads {
    pub params: GruParams,
    pub input: Matrix,
    pub initial_hidden: Vec<f64>,
}

pub fn gru_forward(params: &GruParams, seq: &Matrix, h0: &[f64]) -> Result<GruTrace, EncoderError> {
    if !params.is_consistent() {
        return Err(EncoderError::InconsistentParams);
    }
    if seq.rows() == 0 {
        return Err(EncoderError::EmptySequence);
    }
    let (hdim, d) = (params.hidden(), params.input_dim());
    if seq.cols() != d {
        return Err(EncoderError::ShapeMismatch { what: "sequence width", expected: d, found: seq.cols() });
    }
    if h0.len() != hdim {
        return Err(EncoderError::ShapeMismatch { what: "initial state", expected: hdim, found: h0.len() });
    }
    let [gz, gr, gn] = &params.gates;
    let mut h = h0.to_vec();
    let mut steps = Vec::with_capacity(seq.rows());
    let mut hidden = Matrix::zeros(seq.rows(), hdim);
    for t in 0..seq.rows() {
        let x = seq.row(t);
        let z: Vec<f64> = gz.preactivation(x, &h).into_iter().map(logistic).collect();
        let r: Vec<f64> = gr.preactivation(x, &h).into_iter().map(logistic).collect();
        let reset_h: Vec<f64> = r.iter().zip(&h).map(|(a, b)| a * b).collect();
        let n: Vec<f64> = gn.preactivation(x, &reset_h).into_iter().map(f64::tanh).collect();
        let h_new: Vec<f64> = (0..hdim).map(|j| (1.0 - z[j]) * n[j] + z[j] * h[j]).collect();
        hidden.row_mut(t).copy_from_slice(&h_new);
        steps.push(GruStep { h_prev: h, reset_h, z, r, n });
        h = h_new;
    }
    Ok(GruTrace { input: seq.clone(), steps, hidden, final_hidden: h })
}

pub fn gru_backward(params: &GruParams, trace: &GruTrace, d_hidden: &Matrix) -> Result<GruGrads, EncoderError> {
    let (t_len, hdim, d) = (trace.steps.len(), params.hidden(), params.input_dim());
    if trace.input.cols() != d || trace.final_hidden.len() != hdim {
        return Err(EncoderError::CacheMismatch);
    }
    if d_hidden.shape() != (t_len, hdim) {
        return Err(EncoderError::ShapeMismatch { what: "hidden gradient rows", expected: t_len, found: d_hidden.rows() });
    }
    let [gz, gr, gn] = &params.gates;
    let mut grads = GruParams::zeros(hdim, d);
    let mut d_input = Matrix::zeros(t_len, d);
    let mut dh_next = vec![0.0; hdim];
    for t in (0..t_len).rev() {
        let s = &trace.steps[t];
        let x = trace.input.row(t);
        let dh: Vec<f64> = d_hidden.row(t).iter().zip(&dh_next).map(|(a, b)| a + b).collect();
        let da_z: Vec<f64> = (0..hdim).map(|j| dh[j] * (s.h_prev[j] - s.n[j]) * s.z[j] * (1.0 - s.z[j])).collect();
        let da_n: Vec<f64> = (0..hdim).map(|j| dh[j] * (1.0 - s.z[j]) * (1.0 - s.n[j] * s.n[j])).collect();
        let d_reset_h = gn.recurrent.mat_t_vec(&da_n).expect("square recurrent weights");
        let da_r: Vec<f64> = (0..hdim).map(|j| d_reset_h[j] * s.h_prev[j] * s.r[j] * (1.0 - s.r[j])).collect();

        grads.gates[GruParams::UPDATE].accumulate(&da_z, x, &s.h_prev);
        grads.gates[GruParams::RESET].accumulate(&da_r, x, &s.h_prev);
        grads.gates[GruParams::CANDIDATE].accumulate(&da_n, x, &s.reset_h);

        let mut dh_prev: Vec<f64> = (0..hdim).map(|j| dh[j] * s.z[j] + d_reset_h[j] * s.r[j]).collect();
        let dx = d_input.row_mut(t);
        for (gate, da) in [(gz, &da_z), (gr, &da_r)] {
            for (row, &a) in da.iter().enumerate() {
                if a != 0.0 {
                    axpy(a, gate.recurrent.row(row), &mut dh_prev);
                    axpy(a, gate.input.row(row), dx);
                }
            }
        }
        for (row, &a) in da_n.iter().enumerate() {
            if a != 0.0 {
                axpy(a, gn.input.row(row), dx);
            }
        }
        dh_next = dh_prev;
    }
    Ok(GruGrads { params: grads, input: d_input, initial_hidden: dh_next })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::numerics::dot;
    use crate::rng::{stream_rng, Domain};

    #[test]
    fn zero_params_zero_state() {
        let p = GruParams::zeros(3, 2);
        let seq = Matrix::from_fn(5, 2, |i, j| (i * 2 + j) as f64);
        let tr = gru_forward(&p, &seq, &[0.0; 3]).unwrap();
        assert!(tr.hidden.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_update_gate_carries_state() {
        let mut rng = stream_rng(3, Domain::GradCheck, 0);
        let mut p = GruParams::init(&mut rng, 3, 2);
        p.gates[GruParams::UPDATE].bias = vec![800.0; 3];
        let seq = Matrix::from_fn(4, 2, |i, j| 0.3 * i as f64 - 0.2 * j as f64);
        let h0 = [0.4, -0.7, 0.05];
        let tr = gru_forward(&p, &seq, &h0).unwrap();
        for t in 0..4 {
            assert_eq!(tr.hidden.row(t), &h0);
        }
    }

    /// Scalar loop per hidden unit, written without the gate helpers.
    fn scalar_gru(p: &GruParams, seq: &Matrix, h0: &[f64]) -> Vec<Vec<f64>> {
        let hdim = p.hidden();
        let sig = |a: f64| 1.0 / (1.0 + (-a).exp());
        let mut h = h0.to_vec();
        let mut out = Vec::new();
        for t in 0..seq.rows() {
            let x = seq.row(t);
            let mut z = vec![0.0; hdim];
            let mut r = vec![0.0; hdim];
            for j in 0..hdim {
                let mut az = p.gates[0].bias[j];
                let mut ar = p.gates[1].bias[j];
                for k in 0..x.len() {
                    az += p.gates[0].input[(j, k)] * x[k];
                    ar += p.gates[1].input[(j, k)] * x[k];
                }
                for k in 0..hdim {
                    az += p.gates[0].recurrent[(j, k)] * h[k];
                    ar += p.gates[1].recurrent[(j, k)] * h[k];
                }
                z[j] = sig(az);
                r[j] = sig(ar);
            }
            let mut next = vec![0.0; hdim];
            for j in 0..hdim {
                let mut an = p.gates[2].bias[j];
                for k in 0..x.len() {
                    an += p.gates[2].input[(j, k)] * x[k];
                }
                for k in 0..hdim {
                    an += p.gates[2].recurrent[(j, k)] * r[k] * h[k];
                }
                next[j] = (1.0 - z[j]) * an.tanh() + z[j] * h[j];
            }
            h = next;
            out.push(h.clone());
        }
        out
    }

    #[test]
    fn matches_scalar_oracle() {
        let mut rng = stream_rng(17, Domain::GradCheck, 1);
        let p = GruParams::init(&mut rng, 4, 3);
        let seq = Matrix::from_fn(6, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.6);
        let h0 = [0.1, 0.2, -0.3, 0.0];
        let tr = gru_forward(&p, &seq, &h0).unwrap();
        for (t, row) in scalar_gru(&p, &seq, &h0).iter().enumerate() {
            for (a, b) in tr.hidden.row(t).iter().zip(row) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
        assert!(dot(&tr.final_hidden, &tr.final_hidden).is_finite());
    }
}
