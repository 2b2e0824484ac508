//! Synthetic datasets with a planted bilinear structure.
//!
//! Each class gets a unit embedding `φ(c)`. A hidden planting matrix `M`
//! (rows = streams × feature_dim) maps embeddings to mean video features, so
//! the time average of every stream of a video equals `M_s·φ(c) + ε` with
//! `ε ~ N(0, σ²I)` (up to the `f32` rounding applied to stored features).
//! With `σ = 0` the planted `M` used as a compatibility matrix ranks the true
//! class first for every video.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ClassId, ClassRecord, DataError, Dataset, SplitSpec, Stream, VideoRecord};
use crate::numerics::{dot, l2_normalize, norm2, Matrix, Vector};
use crate::rng::{stream_rng, Domain};

/// Two class embeddings with cosine above `1 − DISTINCT_TOL` are treated as identical.
pub const DISTINCT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Per-stream feature width `d`.
    pub feature_dim: usize,
    /// Class-embedding width `m`.
    pub embedding_dim: usize,
    pub streams: Vec<Stream>,
    pub train_classes: usize,
    pub val_classes: usize,
    pub test_classes: usize,
    pub samples_per_class: usize,
    /// Snippets per video `T`.
    pub snippets: usize,
    /// Standard deviation `σ` of the per-video offset of the stream mean.
    pub noise: f64,
    /// Standard deviation of the zero-mean per-snippet variation around the stream mean.
    pub temporal_jitter: f64,
    /// Draw mutually orthogonal class embeddings (needs classes ≤ `embedding_dim`).
    pub orthogonal_embeddings: bool,
    /// Explicit class embeddings (one row per class, train then val then test).
    pub class_embeddings: Option<Vec<Vec<f64>>>,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            feature_dim: 32,
            embedding_dim: 16,
            streams: vec![Stream::Body],
            train_classes: 40,
            val_classes: 10,
            test_classes: 10,
            samples_per_class: 20,
            snippets: 5,
            noise: 0.0,
            temporal_jitter: 0.1,
            orthogonal_embeddings: false,
            class_embeddings: None,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn total_classes(&self) -> usize {
        self.train_classes + self.val_classes + self.test_classes
    }

    fn check(&self) -> Result<(), DataError> {
        let bad = |msg: &str| Err(DataError::InvalidConfig(msg.to_string()));
        if self.feature_dim == 0 || self.embedding_dim == 0 {
            return bad("feature_dim and embedding_dim must be at least 1");
        }
        if self.train_classes == 0 || self.val_classes == 0 || self.test_classes == 0 {
            return bad("every split needs at least one class");
        }
        if self.samples_per_class == 0 || self.snippets == 0 {
            return bad("samples_per_class and snippets must be at least 1");
        }
        if self.streams.is_empty() {
            return bad("at least one stream is required");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) || !(self.temporal_jitter >= 0.0 && self.temporal_jitter.is_finite()) {
            return bad("noise and temporal_jitter must be finite and non-negative");
        }
        if self.orthogonal_embeddings && self.total_classes() > self.embedding_dim {
            return Err(DataError::InvalidConfig(format!(
                "{} orthogonal class embeddings do not fit in {} dimensions",
                self.total_classes(),
                self.embedding_dim
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    /// Hidden `(streams·d)×m` planting matrix; stream blocks are stacked in
    /// body, hand order, matching the average-pool embedding layout.
    pub planting: Matrix,
}

fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Orthonormalizes the columns of `a` (rows ≥ cols) by twice-applied modified Gram–Schmidt.
fn orthonormal_columns(a: &Matrix) -> Result<Matrix, DataError> {
    let (rows, cols) = a.shape();
    let mut q: Vec<Vec<f64>> = (0..cols).map(|j| a.column(j)).collect();
    for j in 0..cols {
        for _ in 0..2 {
            for k in 0..j {
                let proj = dot(&q[j], &q[k]);
                let qk = q[k].clone();
                for (x, y) in q[j].iter_mut().zip(&qk) {
                    *x -= proj * y;
                }
            }
        }
        let n = norm2(&q[j]);
        if n < 1e-10 {
            return Err(DataError::InvalidConfig("degenerate random draw while orthonormalizing".into()));
        }
        q[j].iter_mut().for_each(|x| *x /= n);
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| q[j][i]))
}

fn class_embeddings(config: &SyntheticConfig) -> Result<Vec<Vector>, DataError> {
    let total = config.total_classes();
    let m = config.embedding_dim;
    let rows: Vec<Vec<f64>> = if let Some(given) = &config.class_embeddings {
        if given.len() != total || given.iter().any(|r| r.len() != m) {
            return Err(DataError::InvalidConfig(format!("class_embeddings must be {total} rows of width {m}")));
        }
        given.clone()
    } else {
        let mut rng = stream_rng(config.seed, Domain::SyntheticEmbeddings, 0);
        if config.orthogonal_embeddings {
            let q = orthonormal_columns(&gaussian_matrix(&mut rng, m, m))?;
            (0..total).map(|j| q.column(j)).collect()
        } else {
            (0..total).map(|_| (0..m).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
        }
    };
    let units = rows
        .iter()
        .map(|r| {
            let v = Vector::new(r.clone())?;
            l2_normalize(&v).map_err(|_| DataError::InvalidConfig("class embeddings must be non-zero".into()))
        })
        .collect::<Result<Vec<_>, DataError>>()?;
    for i in 0..units.len() {
        for j in 0..i {
            if dot(&units[i], &units[j]) > 1.0 - DISTINCT_TOL {
                return Err(DataError::InvalidConfig(format!("classes {j} and {i} have identical embeddings and cannot be distinguished")));
            }
        }
    }
    Ok(units)
}

fn planting_matrix(config: &SyntheticConfig, streams: usize) -> Result<Matrix, DataError> {
    let rows = streams * config.feature_dim;
    let m = config.embedding_dim;
    let mut rng = stream_rng(config.seed, Domain::SyntheticPlanting, 0);
    if rows >= m {
        orthonormal_columns(&gaussian_matrix(&mut rng, rows, m))
    } else {
        Ok(orthonormal_columns(&gaussian_matrix(&mut rng, m, rows))?.transpose())
    }
}

fn round_f32(x: f64) -> f64 {
    f64::from(x as f32)
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<SyntheticDataset, DataError> {
    config.check()?;
    let streams = Stream::canonical(&config.streams);
    let d = config.feature_dim;
    let embeddings = class_embeddings(config)?;
    let planting = planting_matrix(config, streams.len())?;

    // With orthonormal columns MᵀM = I and distinct unit embeddings are
    // separable; the wide case (rows < m) has to be checked.
    let planted_means: Vec<Vec<f64>> = embeddings.iter().map(|e| planting.mat_vec(e)).collect::<Result<_, _>>()?;
    for (c, mean) in planted_means.iter().enumerate() {
        let own = dot(mean, mean);
        for (j, other) in planted_means.iter().enumerate() {
            if j != c && dot(mean, other) > own - DISTINCT_TOL {
                return Err(DataError::InvalidConfig(format!(
                    "planting cannot separate classes {c} and {j}; use feature_dim·streams ≥ embedding_dim"
                )));
            }
        }
    }

    let total = config.total_classes();
    let classes: Vec<ClassRecord> = embeddings
        .into_iter()
        .enumerate()
        .map(|(i, e)| ClassRecord {
            id: ClassId(i as u32),
            name: format!("class_{i:03}"),
            description: Some(format!("synthetic class {i}")),
            embedding: e,
        })
        .collect();

    let mut videos = Vec::with_capacity(total * config.samples_per_class);
    for (c, mean) in planted_means.iter().enumerate() {
        for k in 0..config.samples_per_class {
            let index = (c * config.samples_per_class + k) as u64;
            let mut rng = stream_rng(config.seed, Domain::SyntheticVideos, index);
            let mut seqs = BTreeMap::new();
            for (si, &stream) in streams.iter().enumerate() {
                let block = &mean[si * d..(si + 1) * d];
                let center: Vec<f64> = block
                    .iter()
                    .map(|&mu| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        mu + config.noise * e
                    })
                    .collect();
                let mut jitter = gaussian_matrix(&mut rng, config.snippets, d).scale(config.temporal_jitter);
                for j in 0..d {
                    let avg = (0..config.snippets).map(|t| jitter[(t, j)]).sum::<f64>() / config.snippets as f64;
                    for t in 0..config.snippets {
                        jitter[(t, j)] -= avg;
                    }
                }
                let seq = Matrix::from_fn(config.snippets, d, |t, j| round_f32(center[j] + jitter[(t, j)]));
                seqs.insert(stream, seq);
            }
            videos.push(VideoRecord { id: format!("c{c:03}_s{k:03}"), class: ClassId(c as u32), streams: seqs });
        }
    }

    let ids = |range: std::ops::Range<usize>| range.map(|i| ClassId(i as u32)).collect::<BTreeSet<_>>();
    let a = config.train_classes;
    let b = a + config.val_classes;
    let split = SplitSpec { train: ids(0..a), val: ids(a..b), test: ids(b..total) };
    let dataset = Dataset::new(d, config.embedding_dim, streams, classes, videos, split)?;
    Ok(SyntheticDataset { dataset, planting })
}
