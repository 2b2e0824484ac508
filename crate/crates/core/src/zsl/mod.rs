//! Bilinear compatibility `F(v, c) = θ(v)ᵀ·W·φ(c)`, the zero-shot classifier
//! built on it, and three ways of fitting `W`:
//!
//! * LLE: softmax cross-entropy over seen classes with an `ℓ2` penalty,
//!   trained jointly with the temporal encoder by momentum SGD.
//! * ESZSL: ridge-regularized regression with a closed form.
//! * SAE: a linear semantic auto-encoder solved as a Sylvester equation;
//!   classification projects `θ` into the embedding space and ranks by cosine.

mod closed_form;
mod lle;
mod model_file;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ClassId, ClassRecord, DataError, Dataset, Split, VideoRecord};
use crate::encoders::{Encoder, EncoderConfig, EncoderError};
use crate::numerics::{cosine, dot, norm2, Matrix, NumericsError};

pub use closed_form::{eszsl_objective, eszsl_targets, fit_eszsl, fit_eszsl_dataset, fit_sae, fit_sae_dataset, sae_objective};
pub use lle::{lle_objective_and_gradient, train_lle, EpochRecord, LleGradient, TrainingLog};
pub use model_file::{decode_model, encode_model, read_model, write_model, MODEL_MAGIC};

#[derive(Debug, Error)]
pub enum ZslError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{what}: expected {expected}, found {found}")]
    DimMismatch { what: &'static str, expected: usize, found: usize },
    #[error("empty candidate set")]
    EmptyCandidates,
    #[error("empty batch")]
    EmptyBatch,
    #[error("class {0} is not among the seen classes")]
    UnknownClass(ClassId),
    #[error("{which} Gram matrix is singular with a zero regularizer; increase {param}")]
    SingularGram { which: &'static str, param: &'static str },
    #[error("SAE system is singular: SSᵀ (rank ≤ {seen_classes} seen classes, m = {embedding_dim}) and XXᵀ (rank ≤ {samples} samples, d = {theta_dim}) are both rank deficient")]
    SingularSae { seen_classes: usize, embedding_dim: usize, samples: usize, theta_dim: usize },
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ZslError {
    /// True for failures of the numerical method rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, ZslError::Numerics(_) | ZslError::SingularGram { .. } | ZslError::SingularSae { .. } | ZslError::Divergence { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lle,
    Eszsl,
    Sae,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Lle, ModelKind::Eszsl, ModelKind::Sae];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lle => "lle",
            ModelKind::Eszsl => "eszsl",
            ModelKind::Sae => "sae",
        }
    }

    /// Display name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Lle => "LLE",
            ModelKind::Eszsl => "ESZSL",
            ModelKind::Sae => "SAE",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lle" => Ok(ModelKind::Lle),
            "eszsl" => Ok(ModelKind::Eszsl),
            "sae" => Ok(ModelKind::Sae),
            other => Err(format!("unknown model {other:?} (expected lle, eszsl or sae)")),
        }
    }
}

/// ESZSL regression targets for the non-matching classes.
///
/// With `Signed` the constant `−1` part of the targets adds a rank-one term to
/// `W` that shifts every score by a class-dependent offset, which costs
/// accuracy on unseen classes even on noise-free data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetEncoding {
    /// `1` for the sample's class, `0` elsewhere.
    #[default]
    Binary,
    /// `1` for the sample's class, `−1` elsewhere.
    Signed,
}

/// Hyperparameters for fitting any model kind. Fields a kind does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// `λ`: LLE weight penalty, ESZSL embedding-side ridge, SAE reconstruction balance.
    pub lambda: f64,
    /// `γ`: ESZSL feature-side ridge.
    pub gamma: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation top-1 improvement before stopping.
    pub patience: usize,
    /// `ℓ2`-normalize video embeddings before scoring.
    pub normalize_theta: bool,
    pub eszsl_targets: TargetEncoding,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            gamma: 1e-3,
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            max_epochs: 500,
            patience: 20,
            normalize_theta: false,
            eszsl_targets: TargetEncoding::Binary,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn check(&self, kind: ModelKind) -> Result<(), ZslError> {
        let bad = |m: String| Err(ZslError::InvalidConfig(m));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) || !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("lambda and gamma must be finite and non-negative".into());
        }
        if kind == ModelKind::Sae && self.lambda <= 0.0 {
            return bad("SAE needs lambda > 0".into());
        }
        if kind == ModelKind::Lle {
            if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
                return bad("learning_rate must be positive".into());
            }
            if !(0.0..1.0).contains(&self.momentum) {
                return bad("momentum must lie in [0, 1)".into());
            }
            if self.batch_size == 0 || self.max_epochs == 0 {
                return bad("batch_size and max_epochs must be at least 1".into());
            }
        }
        Ok(())
    }
}

/// One candidate's position in a ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedClass {
    pub class: ClassId,
    pub score: f64,
}

/// A fitted model: temporal encoder plus `d_θ×m` compatibility matrix.
///
/// For SAE the stored matrix is the transpose of the `m×d_θ` semantic
/// projection, so `Wᵀθ` is the projected embedding in every case.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityModel {
    pub kind: ModelKind,
    pub w: Matrix,
    pub encoder: Encoder,
    pub normalize_theta: bool,
}

impl CompatibilityModel {
    pub fn new(kind: ModelKind, w: Matrix, encoder: Encoder, normalize_theta: bool) -> Result<Self, ZslError> {
        if !w.is_finite() {
            return Err(ZslError::Numerics(NumericsError::NonFinite {
                index: w.values().iter().position(|v| !v.is_finite()).unwrap_or(0),
            }));
        }
        if w.rows() != encoder.output_dim() {
            return Err(ZslError::DimMismatch { what: "W rows vs encoder output", expected: encoder.output_dim(), found: w.rows() });
        }
        Ok(Self { kind, w, encoder, normalize_theta })
    }

    pub fn theta_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn embedding_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn encoder_config(&self) -> &EncoderConfig {
        self.encoder.config()
    }

    /// `θ(v)`, normalized when the model asks for it.
    pub fn embed(&self, video: &VideoRecord) -> Result<Vec<f64>, ZslError> {
        let theta = self.encoder.encode(video)?;
        Ok(if self.normalize_theta { normalize_or_keep(theta) } else { theta })
    }

    /// `Wᵀθ`.
    pub fn project(&self, theta: &[f64]) -> Result<Vec<f64>, ZslError> {
        if theta.len() != self.theta_dim() {
            return Err(ZslError::DimMismatch { what: "θ", expected: self.theta_dim(), found: theta.len() });
        }
        Ok(self.w.mat_t_vec(theta)?)
    }

    /// Ranks `candidates` for an already-embedded video.
    pub fn rank_embedding(&self, theta: &[f64], candidates: &[ClassRecord]) -> Result<Vec<RankedClass>, ZslError> {
        if candidates.is_empty() {
            return Err(ZslError::EmptyCandidates);
        }
        let projected = self.project(theta)?;
        let mut ranked = candidates
            .iter()
            .map(|c| {
                if c.embedding.dim() != self.embedding_dim() {
                    return Err(ZslError::DimMismatch {
                        what: "class embedding",
                        expected: self.embedding_dim(),
                        found: c.embedding.dim(),
                    });
                }
                let score = match self.kind {
                    ModelKind::Sae => cosine(&projected, &c.embedding),
                    ModelKind::Lle | ModelKind::Eszsl => dot(&projected, &c.embedding),
                };
                Ok(RankedClass { class: c.id, score })
            })
            .collect::<Result<Vec<_>, ZslError>>()?;
        sort_ranking(&mut ranked);
        Ok(ranked)
    }
}

fn normalize_or_keep(v: Vec<f64>) -> Vec<f64> {
    let n = norm2(&v);
    if n > 0.0 {
        v.into_iter().map(|x| x / n).collect()
    } else {
        v
    }
}

/// Descending score, ties by ascending class id.
pub(crate) fn sort_ranking(ranked: &mut [RankedClass]) {
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.class.cmp(&b.class)));
}

/// `θᵀ·W·φ`.
pub fn score(model: &CompatibilityModel, theta: &[f64], phi: &[f64]) -> Result<f64, ZslError> {
    bilinear(&model.w, theta, phi)
}

pub fn bilinear(w: &Matrix, theta: &[f64], phi: &[f64]) -> Result<f64, ZslError> {
    if theta.len() != w.rows() {
        return Err(ZslError::DimMismatch { what: "θ", expected: w.rows(), found: theta.len() });
    }
    if phi.len() != w.cols() {
        return Err(ZslError::DimMismatch { what: "φ", expected: w.cols(), found: phi.len() });
    }
    Ok(dot(theta, &w.mat_vec(phi)?))
}

/// Ranks `candidates` for `video` by descending compatibility; ties go to the
/// smaller class id.
pub fn classify(model: &CompatibilityModel, video: &VideoRecord, candidates: &[ClassRecord]) -> Result<Vec<RankedClass>, ZslError> {
    if candidates.is_empty() {
        return Err(ZslError::EmptyCandidates);
    }
    let theta = model.embed(video)?;
    model.rank_embedding(&theta, candidates)
}

/// Ranked class ids for every video in `videos`, in input order.
pub fn rank_videos(model: &CompatibilityModel, videos: &[&VideoRecord], candidates: &[ClassRecord]) -> Result<Vec<Vec<ClassId>>, ZslError> {
    videos.par_iter().map(|v| Ok(classify(model, v, candidates)?.into_iter().map(|r| r.class).collect())).collect()
}

/// What to fit: model kind, encoder and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { kind: ModelKind::Lle, encoder: EncoderConfig::default(), train: TrainConfig::default() }
    }
}

/// Fits a model on the train split of `dataset`.
pub fn fit_model(dataset: &Dataset, spec: &ModelSpec) -> Result<(CompatibilityModel, Option<TrainingLog>), ZslError> {
    spec.train.check(spec.kind)?;
    match spec.kind {
        ModelKind::Lle => {
            let (model, log) = train_lle(dataset, &spec.encoder, &spec.train)?;
            Ok((model, Some(log)))
        }
        ModelKind::Eszsl => Ok((fit_eszsl_dataset(dataset, &spec.encoder, &spec.train)?, None)),
        ModelKind::Sae => Ok((fit_sae_dataset(dataset, &spec.encoder, &spec.train)?, None)),
    }
}

/// Embeds every video of `split`; returns the `d_θ×N` matrix and labels.
pub(crate) fn embed_split(
    dataset: &Dataset,
    split: Split,
    encoder: &Encoder,
    normalize_theta: bool,
) -> Result<(Matrix, Vec<ClassId>), ZslError> {
    let videos = dataset.videos_in(split);
    let thetas = videos
        .par_iter()
        .map(|v| {
            let t = encoder.encode(v)?;
            Ok(if normalize_theta { normalize_or_keep(t) } else { t })
        })
        .collect::<Result<Vec<_>, ZslError>>()?;
    let rows = Matrix::from_rows(&thetas)?;
    Ok((rows.transpose(), videos.iter().map(|v| v.class).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Stream;
    use crate::encoders::EncoderKind;
    use crate::numerics::Vector;
    use std::collections::BTreeMap;

    fn avgpool_model(w: Matrix, kind: ModelKind) -> CompatibilityModel {
        let enc = Encoder::new(EncoderConfig::new(EncoderKind::AvgPool, &[Stream::Body]), w.rows(), 0).unwrap();
        CompatibilityModel::new(kind, w, enc, false).unwrap()
    }

    fn class(id: u32, e: &[f64]) -> ClassRecord {
        ClassRecord { id: ClassId(id), name: String::new(), description: None, embedding: Vector::new(e.to_vec()).unwrap() }
    }

    fn video(feat: &[f64]) -> VideoRecord {
        VideoRecord { id: "v".into(), class: ClassId(0), streams: BTreeMap::from([(Stream::Body, Matrix::from_rows(&[feat]).unwrap())]) }
    }

    #[test]
    fn score_examples() {
        let m = avgpool_model(Matrix::identity(2), ModelKind::Lle);
        assert_eq!(score(&m, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let z = avgpool_model(Matrix::zeros(2, 3), ModelKind::Lle);
        assert_eq!(score(&z, &[1.5, -2.0], &[3.0, 4.0, 5.0]).unwrap(), 0.0);
        assert!(matches!(score(&m, &[1.0], &[1.0, 2.0]), Err(ZslError::DimMismatch { .. })));
    }

    #[test]
    fn score_matches_double_loop() {
        let w = Matrix::from_fn(3, 4, |i, j| ((i * 4 + j) as f64 * 0.37).sin());
        let theta = [0.3, -1.2, 2.2];
        let phi = [1.0, 0.5, -0.25, 0.125];
        let mut naive = 0.0;
        for i in 0..3 {
            for j in 0..4 {
                naive += theta[i] * w[(i, j)] * phi[j];
            }
        }
        let m = avgpool_model(w, ModelKind::Eszsl);
        assert!((score(&m, &theta, &phi).unwrap() - naive).abs() <= 1e-12);
    }

    #[test]
    fn classify_single_and_ties() {
        let m = avgpool_model(Matrix::identity(2), ModelKind::Lle);
        let v = video(&[1.0, 0.0]);
        let r = classify(&m, &v, &[class(4, &[0.0, 1.0])]).unwrap();
        assert_eq!(r[0].class, ClassId(4));
        let r = classify(&m, &v, &[class(9, &[1.0, 0.0]), class(3, &[0.0, 1.0]), class(2, &[1.0, 0.0])]).unwrap();
        let order: Vec<u32> = r.iter().map(|x| x.class.0).collect();
        assert_eq!(order, vec![2, 9, 3]);
        assert!(matches!(classify(&m, &v, &[]), Err(ZslError::EmptyCandidates)));
    }

    #[test]
    fn sae_ranks_by_cosine() {
        let m = avgpool_model(Matrix::identity(2), ModelKind::Sae);
        let cands = [class(0, &[1.0, 0.0]), class(1, &[0.6, 0.8])];
        let a = classify(&m, &video(&[0.5, 1.0]), &cands).unwrap();
        let b = classify(&m, &video(&[5.0, 10.0]), &cands).unwrap();
        assert_eq!(a.iter().map(|r| r.class).collect::<Vec<_>>(), b.iter().map(|r| r.class).collect::<Vec<_>>());
        assert!((a[0].score - b[0].score).abs() < 1e-15);
    }

    #[test]
    fn config_checks() {
        assert!(TrainConfig { lambda: 0.0, ..Default::default() }.check(ModelKind::Sae).is_err());
        assert!(TrainConfig { learning_rate: 0.0, ..Default::default() }.check(ModelKind::Lle).is_err());
        assert!(TrainConfig { learning_rate: 0.0, ..Default::default() }.check(ModelKind::Eszsl).is_ok());
        assert!(TrainConfig { gamma: -1.0, ..Default::default() }.check(ModelKind::Eszsl).is_err());
    }
}
