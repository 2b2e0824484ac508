//! Central finite-difference checks of every analytic gradient in the crate.
//!
//! Each suite perturbs every parameter (and every input entry) of a small
//! seeded instance by `±step` and compares `(f(x+h) − f(x−h)) / 2h` with the
//! analytic value using
//! `|analytic − numeric| / max(|analytic|, |numeric|, floor)`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::{ClassId, ClassRecord, Stream, VideoRecord};
use crate::encoders::{Encoder, EncoderConfig, EncoderError, EncoderKind, InitialState, Readout};
use crate::numerics::{dot, l2_normalize, Matrix};
use crate::rng::{stream_rng, Domain};
use crate::zsl::{lle_objective_and_gradient, ZslError};

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Denominator floor so that entries whose true gradient is zero are judged
/// by absolute error.
pub const DEFAULT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub seed: u64,
    pub step: f64,
    pub tolerance: f64,
    pub floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { seed: 0, step: DEFAULT_STEP, tolerance: DEFAULT_TOLERANCE, floor: DEFAULT_FLOOR }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    /// Number of gradient entries compared.
    pub checked: usize,
    pub max_rel_error: f64,
    /// Label of the entry with the largest error.
    pub worst: String,
    pub passed: bool,
}

impl std::fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<4} {:<34} entries {:>5}  max rel error {:.3e}  ({})",
            if self.passed { "ok" } else { "FAIL" },
            self.name,
            self.checked,
            self.max_rel_error,
            self.worst
        )
    }
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

#[derive(Debug, thiserror::Error)]
pub enum GradCheckError {
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Zsl(#[from] ZslError),
}

struct Tally {
    name: String,
    checked: usize,
    max: f64,
    worst: String,
    floor: f64,
}

impl Tally {
    fn new(name: impl Into<String>, floor: f64) -> Self {
        Self { name: name.into(), checked: 0, max: 0.0, worst: "-".into(), floor }
    }

    fn add(&mut self, label: impl FnOnce() -> String, analytic: f64, numeric: f64) {
        let e = relative_error(analytic, numeric, self.floor);
        self.checked += 1;
        if e > self.max || e.is_nan() {
            self.max = if e.is_nan() { f64::INFINITY } else { e };
            self.worst = label();
        }
    }

    fn finish(self, tolerance: f64) -> SuiteResult {
        SuiteResult { passed: self.max <= tolerance, name: self.name, checked: self.checked, max_rel_error: self.max, worst: self.worst }
    }
}

fn central(step: f64, f: impl Fn(f64) -> f64) -> f64 {
    (f(step) - f(-step)) / (2.0 * step)
}

fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// LLE loss gradients w.r.t. `W` and every `θ_i` on a `d_θ = 5`, `m = 4`,
/// 6-class, 12-sample instance.
pub fn check_lle(config: &GradCheckConfig) -> Result<Vec<SuiteResult>, GradCheckError> {
    let (d, m, classes, samples, lambda) = (5, 4, 6, 12, 0.05);
    let mut rng = stream_rng(config.seed, Domain::GradCheck, 100);
    let seen: Vec<ClassRecord> = (0..classes)
        .map(|c| {
            let raw: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            ClassRecord {
                id: ClassId(c as u32),
                name: format!("c{c}"),
                description: None,
                embedding: l2_normalize(&raw).expect("nonzero draw"),
            }
        })
        .collect();
    let w = gaussian_matrix(&mut rng, d, m, 0.7);
    let thetas: Vec<Vec<f64>> = (0..samples).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let labels: Vec<ClassId> = (0..samples).map(|i| ClassId((i % classes) as u32)).collect();
    let loss = |w: &Matrix, thetas: &[Vec<f64>]| -> f64 {
        let batch: Vec<(&[f64], ClassId)> = thetas.iter().map(|t| t.as_slice()).zip(labels.iter().copied()).collect();
        lle_objective_and_gradient(w, &batch, &seen, lambda).expect("valid instance").loss
    };
    let batch: Vec<(&[f64], ClassId)> = thetas.iter().map(|t| t.as_slice()).zip(labels.iter().copied()).collect();
    let grad = lle_objective_and_gradient(&w, &batch, &seen, lambda)?;

    let mut tw = Tally::new("lle dW", config.floor);
    for i in 0..d {
        for j in 0..m {
            let n = central(config.step, |h| {
                let mut p = w.clone();
                p[(i, j)] += h;
                loss(&p, &thetas)
            });
            tw.add(|| format!("W[{i},{j}]"), grad.grad_w[(i, j)], n);
        }
    }
    let mut tt = Tally::new("lle dtheta", config.floor);
    for s in 0..samples {
        for k in 0..d {
            let n = central(config.step, |h| {
                let mut p = thetas.clone();
                p[s][k] += h;
                loss(&w, &p)
            });
            tt.add(|| format!("theta[{s}][{k}]"), grad.grad_theta[s][k], n);
        }
    }
    Ok(vec![tw.finish(config.tolerance), tt.finish(config.tolerance)])
}

/// One encoder instance to check.
#[derive(Debug, Clone)]
pub struct EncoderCase {
    pub name: String,
    pub config: EncoderConfig,
    pub feature_dim: usize,
    pub snippets: usize,
}

/// The default encoder cases: every kind, both initial states (zero init with
/// `d = 3`, `h = 4`; average-pool init with `d = h = 4`), both readouts for
/// recurrent kinds, two streams throughout, `T = 5`.
pub fn default_encoder_cases() -> Vec<EncoderCase> {
    let streams = [Stream::Body, Stream::Hand];
    let mut cases = vec![EncoderCase {
        name: "avgpool".into(),
        config: EncoderConfig::new(EncoderKind::AvgPool, &streams),
        feature_dim: 3,
        snippets: 5,
    }];
    for kind in [EncoderKind::Lstm, EncoderKind::Gru, EncoderKind::BiLstm] {
        for (init, d) in [(InitialState::Zero, 3), (InitialState::AveragePool, 4)] {
            for readout in [Readout::Final, Readout::Mean] {
                let mut config = EncoderConfig::new(kind, &streams);
                config.hidden = Some(4);
                config.initial_state = init;
                config.readout = readout;
                let init_name = match init {
                    InitialState::Zero => "zero-init",
                    InitialState::AveragePool => "avgpool-init",
                };
                let readout_name = match readout {
                    Readout::Final => "final",
                    Readout::Mean => "mean",
                };
                cases.push(EncoderCase { name: format!("{kind} {init_name} {readout_name}"), config, feature_dim: d, snippets: 5 });
            }
        }
    }
    cases
}

/// Gradients of `uᵀθ(v)` for a random upstream `u`, w.r.t. every encoder
/// parameter and every input feature.
pub fn check_encoder(case: &EncoderCase, config: &GradCheckConfig, index: u64) -> Result<SuiteResult, GradCheckError> {
    let mut encoder = Encoder::new(case.config.clone(), case.feature_dim, config.seed.wrapping_add(index))?;
    let mut rng = stream_rng(config.seed, Domain::GradCheck, 200 + index);
    // Perturb biases away from their structured init so every path is exercised.
    let mut flat = encoder.params().to_flat();
    for v in &mut flat {
        *v += 0.1 * rng.sample::<f64, _>(StandardNormal);
    }
    if !flat.is_empty() {
        encoder.params_mut().set_flat(&flat);
    }
    let streams: BTreeMap<Stream, Matrix> =
        encoder.config().streams.iter().map(|&s| (s, gaussian_matrix(&mut rng, case.snippets, case.feature_dim, 0.8))).collect();
    let video = VideoRecord { id: "gradcheck".into(), class: ClassId(0), streams };
    let upstream: Vec<f64> = (0..encoder.output_dim()).map(|_| rng.sample(StandardNormal)).collect();

    let trace = encoder.forward(&video)?;
    let grads = encoder.backward(&trace, &upstream)?;
    let objective = |enc: &Encoder, v: &VideoRecord| dot(&enc.encode(v).expect("valid instance"), &upstream);

    let mut tally = Tally::new(format!("encoder {}", case.name), config.floor);
    let analytic = grads.params.to_flat();
    let numeric: Vec<f64> = (0..flat.len())
        .into_par_iter()
        .map(|p| {
            central(config.step, |h| {
                let mut enc = encoder.clone();
                let mut f = flat.clone();
                f[p] += h;
                enc.params_mut().set_flat(&f);
                objective(&enc, &video)
            })
        })
        .collect();
    for (p, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        tally.add(|| format!("param[{p}]"), *a, *n);
    }
    for (stream, dx) in &grads.inputs {
        for t in 0..dx.rows() {
            for k in 0..dx.cols() {
                let n = central(config.step, |h| {
                    let mut v = video.clone();
                    v.streams.get_mut(stream).expect("stream present").values_mut()[t * dx.cols() + k] += h;
                    objective(&encoder, &v)
                });
                tally.add(|| format!("{stream} x[{t}][{k}]"), dx[(t, k)], n);
            }
        }
    }
    Ok(tally.finish(config.tolerance))
}

/// Every suite: LLE (`∇W`, `∇θ`) and all [`default_encoder_cases`].
pub fn run_all(config: &GradCheckConfig) -> Result<Vec<SuiteResult>, GradCheckError> {
    let mut out = check_lle(config)?;
    for (i, case) in default_encoder_cases().iter().enumerate() {
        out.push(check_encoder(case, config, i as u64)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.0, 1.0, 1e-6), 0.0);
        assert!((relative_error(2.0, 1.0, 1e-6) - 0.5).abs() < 1e-15);
        assert!((relative_error(0.0, 1e-9, 1e-6) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn all_suites_pass() {
        for r in run_all(&GradCheckConfig { seed: 3, ..Default::default() }).unwrap() {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn a_wrong_gradient_is_caught() {
        let mut t = Tally::new("x", 1e-6);
        t.add(|| "a".into(), 1.0, 1.1);
        assert!(!t.finish(1e-4).passed);
    }
}
