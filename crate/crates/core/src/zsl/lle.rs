//! Softmax cross-entropy over seen classes, trained jointly with the encoder.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{CompatibilityModel, ModelKind, TrainConfig, ZslError};
use crate::data::{ClassId, ClassRecord, Dataset, Split};
use crate::encoders::{Encoder, EncoderConfig, EncoderParams};
use crate::eval::topk_normalized_accuracy;
use crate::numerics::{axpy, dot, log_sum_exp, norm2, softmax, Matrix};
use crate::rng::{stream_rng, Domain};

/// Loss and gradients of the LLE objective on one batch.
#[derive(Debug, Clone)]
pub struct LleGradient {
    pub loss: f64,
    /// Includes the `2λW` term.
    pub grad_w: Matrix,
    /// One gradient per batch sample, in batch order.
    pub grad_theta: Vec<Vec<f64>>,
}

/// Seen-class embeddings as rows plus an id lookup.
struct SeenClasses {
    rows: Matrix,
    index: HashMap<ClassId, usize>,
}

impl SeenClasses {
    fn new(seen: &[ClassRecord], m: usize) -> Result<Self, ZslError> {
        if seen.is_empty() {
            return Err(ZslError::EmptyCandidates);
        }
        let mut rows = Matrix::zeros(seen.len(), m);
        let mut index = HashMap::with_capacity(seen.len());
        for (k, c) in seen.iter().enumerate() {
            if c.embedding.dim() != m {
                return Err(ZslError::DimMismatch { what: "class embedding", expected: m, found: c.embedding.dim() });
            }
            rows.row_mut(k).copy_from_slice(&c.embedding);
            index.insert(c.id, k);
        }
        Ok(Self { rows, index })
    }

    fn position(&self, class: ClassId) -> Result<usize, ZslError> {
        self.index.get(&class).copied().ok_or(ZslError::UnknownClass(class))
    }

    /// `(−log p_y, g)` with `g = Σ_c p_c φ_c − φ_y`, the gradient of the loss
    /// w.r.t. the projection `Wᵀθ`.
    fn sample(&self, projected: &[f64], y: usize) -> (f64, Vec<f64>) {
        let scores = self.rows.mat_vec(projected).expect("projection width matches embeddings");
        let loss = log_sum_exp(&scores) - scores[y];
        let p = softmax(&scores);
        let mut g = self.rows.mat_t_vec(&p).expect("probabilities match class count");
        axpy(-1.0, self.rows.row(y), &mut g);
        (loss, g)
    }
}

/// `L = −(1/N) Σ log softmax(θ_iᵀ W Φ)[c_i] + λ‖W‖²_F` over `batch`, with
/// analytic `∇_W` and per-sample `∇_θ`.
pub fn lle_objective_and_gradient(
    w: &Matrix,
    batch: &[(&[f64], ClassId)],
    seen: &[ClassRecord],
    lambda: f64,
) -> Result<LleGradient, ZslError> {
    if batch.is_empty() {
        return Err(ZslError::EmptyBatch);
    }
    let seen = SeenClasses::new(seen, w.cols())?;
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = w.scale(2.0 * lambda);
    let mut grad_theta = Vec::with_capacity(batch.len());
    for &(theta, class) in batch {
        if theta.len() != w.rows() {
            return Err(ZslError::DimMismatch { what: "θ", expected: w.rows(), found: theta.len() });
        }
        let y = seen.position(class)?;
        let (l, g) = seen.sample(&w.mat_t_vec(theta)?, y);
        loss += l / n;
        add_outer(&mut grad_w, 1.0 / n, theta, &g);
        grad_theta.push(w.mat_vec(&g)?.into_iter().map(|v| v / n).collect());
    }
    let wn = w.frobenius_norm();
    Ok(LleGradient { loss: loss + lambda * wn * wn, grad_w, grad_theta })
}

/// `a += alpha · u·vᵀ`.
fn add_outer(a: &mut Matrix, alpha: f64, u: &[f64], v: &[f64]) {
    for (i, &ui) in u.iter().enumerate() {
        if ui != 0.0 {
            axpy(alpha * ui, v, a.row_mut(i));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean mini-batch objective over the epoch.
    pub train_loss: f64,
    /// Normalized top-1 on validation videos ranked among validation classes.
    pub val_top1: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch (1-based) whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_top1: f64,
    pub stopped_early: bool,
}

impl TrainingLog {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }
}

struct SampleResult {
    loss: f64,
    theta: Vec<f64>,
    g: Vec<f64>,
    encoder_grads: Option<EncoderParams>,
}

/// Gradient of `x ↦ x/‖x‖` applied to `upstream`.
fn normalize_backward(raw: &[f64], upstream: &[f64]) -> Vec<f64> {
    let n = norm2(raw);
    if n == 0.0 {
        return upstream.to_vec();
    }
    let proj = dot(raw, upstream) / (n * n);
    raw.iter().zip(upstream).map(|(x, u)| (u - proj * x) / n).collect()
}

/// Mini-batch SGD with momentum on `W` and the encoder parameters.
///
/// `W` starts at zero. The `λ‖W‖²` term is applied as an exact proximal step
/// after each momentum update, which keeps very large `λ` stable. Parameters
/// with the best validation top-1 are returned; training stops after
/// `patience` epochs without improvement.
pub fn train_lle(
    dataset: &Dataset,
    encoder_config: &EncoderConfig,
    config: &TrainConfig,
) -> Result<(CompatibilityModel, TrainingLog), ZslError> {
    config.check(ModelKind::Lle)?;
    let train_videos = dataset.videos_in(Split::Train);
    if train_videos.is_empty() {
        return Err(ZslError::EmptyBatch);
    }
    let seen_records: Vec<ClassRecord> = dataset.classes_in(Split::Train).into_iter().cloned().collect();
    let val_classes: Vec<ClassRecord> = dataset.classes_in(Split::Val).into_iter().cloned().collect();
    let val_videos = dataset.videos_in(Split::Val);
    let seen = SeenClasses::new(&seen_records, dataset.embedding_dim())?;
    let labels: Vec<usize> = train_videos.iter().map(|v| seen.position(v.class)).collect::<Result<_, _>>()?;

    let mut encoder = Encoder::new(encoder_config.clone(), dataset.feature_dim(), config.seed)?;
    let mut w = Matrix::zeros(encoder.output_dim(), dataset.embedding_dim());
    let mut vel_w = w.clone();
    let mut vel_enc = encoder.params().zeros_like();
    let trains_encoder = encoder.has_params();
    let shrink = 1.0 / (1.0 + 2.0 * config.learning_rate * config.lambda);

    let mut log = TrainingLog { best_val_top1: f64::NEG_INFINITY, ..Default::default() };
    let mut best: Option<CompatibilityModel> = None;
    let mut stale = 0;
    let mut order: Vec<usize> = (0..train_videos.len()).collect();

    for epoch in 1..=config.max_epochs {
        order.sort_unstable();
        order.shuffle(&mut stream_rng(config.seed, Domain::Shuffle, epoch as u64));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let bn = batch.len() as f64;
            let samples = batch
                .par_iter()
                .map(|&i| -> Result<SampleResult, ZslError> {
                    let trace = encoder.forward(train_videos[i])?;
                    let theta = if config.normalize_theta { super::normalize_or_keep(trace.output.clone()) } else { trace.output.clone() };
                    let (loss, g) = seen.sample(&w.mat_t_vec(&theta)?, labels[i]);
                    let encoder_grads = if trains_encoder {
                        let mut up: Vec<f64> = w.mat_vec(&g)?.into_iter().map(|v| v / bn).collect();
                        if config.normalize_theta {
                            up = normalize_backward(&trace.output, &up);
                        }
                        Some(encoder.backward(&trace, &up)?.params)
                    } else {
                        None
                    };
                    Ok(SampleResult { loss, theta, g, encoder_grads })
                })
                .collect::<Result<Vec<_>, _>>()?;

            let mut grad_w = Matrix::zeros(w.rows(), w.cols());
            let mut grad_enc = trains_encoder.then(|| encoder.params().zeros_like());
            let mut batch_loss = 0.0;
            for s in &samples {
                batch_loss += s.loss / bn;
                add_outer(&mut grad_w, 1.0 / bn, &s.theta, &s.g);
                if let (Some(acc), Some(g)) = (grad_enc.as_mut(), s.encoder_grads.as_ref()) {
                    acc.add_scaled(1.0, g);
                }
            }
            let wn = w.frobenius_norm();
            batch_loss += config.lambda * wn * wn;
            if !batch_loss.is_finite() {
                return Err(ZslError::Divergence { epoch, loss: batch_loss });
            }
            epoch_loss += batch_loss * bn;

            vel_w = vel_w.scale(config.momentum);
            vel_w.add_scaled(-config.learning_rate, &grad_w)?;
            w.add_scaled(1.0, &vel_w)?;
            w = w.scale(shrink);
            if let Some(g) = grad_enc {
                vel_enc = scaled(&vel_enc, config.momentum);
                vel_enc.add_scaled(-config.learning_rate, &g);
                encoder.params_mut().add_scaled(1.0, &vel_enc);
            }
            if !w.is_finite() || !encoder.params().is_finite() {
                return Err(ZslError::Divergence { epoch, loss: f64::NAN });
            }
        }
        let train_loss = epoch_loss / train_videos.len() as f64;

        let snapshot =
            CompatibilityModel { kind: ModelKind::Lle, w: w.clone(), encoder: encoder.clone(), normalize_theta: config.normalize_theta };
        let rankings = super::rank_videos(&snapshot, &val_videos, &val_classes)?;
        let val_labels: Vec<ClassId> = val_videos.iter().map(|v| v.class).collect();
        let val_top1 = topk_normalized_accuracy(&rankings, &val_labels, 1).map_err(|e| ZslError::InvalidConfig(e.to_string()))?;
        log.epochs.push(EpochRecord { epoch, train_loss, val_top1 });
        log::debug!("epoch {epoch}: loss {train_loss:.6}, val top-1 {val_top1:.4}");

        if val_top1 > log.best_val_top1 {
            log.best_val_top1 = val_top1;
            log.best_epoch = epoch;
            best = Some(snapshot);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    let model = best.expect("at least one epoch runs");
    Ok((model, log))
}

fn scaled(p: &EncoderParams, alpha: f64) -> EncoderParams {
    let mut out = p.zeros_like();
    out.add_scaled(alpha, p);
    out
}
