//! Dataset model, feature-file ingestion, split validation, sequence
//! resampling and the synthetic generator.
//!
//! A [`Dataset`] is immutable once built and is always structurally valid:
//! class splits are pairwise disjoint, every video's streams agree in length
//! and width, and every class embedding has unit norm.

mod io;
mod manifest;
mod resample;
mod synthetic;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{l2_normalize, Matrix, NumericsError, Vector};

pub use io::{
    decode_header, decode_matrix, encode_matrix, read_class_embedding_file, read_feature_file, read_header, write_class_embedding_file,
    write_feature_file, CLASS_EMBEDDING_MAGIC, FEATURE_MAGIC, MAX_ENTRIES,
};
pub use manifest::{
    load_dataset, validate_dataset, write_dataset, DatasetManifest, ManifestClass, ManifestSplit, ManifestVideo, MANIFEST_FILE,
};
pub use resample::resample_sequence;
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticDataset};
pub use validate::{ValidationReport, Violation};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("trailing bytes: expected {expected} bytes, found {found}")]
    TrailingBytes { expected: u64, found: u64 },
    #[error("dimension overflow: {rows}x{cols}")]
    DimensionOverflow { rows: u64, cols: u64 },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("dataset is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("empty sequence")]
    EmptySequence,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Feature stream. The derived order is the concatenation order of
/// two-stream embeddings: body first, then hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    Body,
    Hand,
}

impl Stream {
    pub const ALL: [Stream; 2] = [Stream::Body, Stream::Hand];

    pub fn name(self) -> &'static str {
        match self {
            Stream::Body => "body",
            Stream::Hand => "hand",
        }
    }

    /// Sorted, de-duplicated stream list.
    pub fn canonical(streams: &[Stream]) -> Vec<Stream> {
        streams.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// `"body+hand"`-style label.
    pub fn label(streams: &[Stream]) -> String {
        Self::canonical(streams).iter().map(|s| s.name()).collect::<Vec<_>>().join("+")
    }

    /// Parses `body`, `hand`, `body+hand` or comma-separated lists.
    pub fn parse_list(s: &str) -> Result<Vec<Stream>, String> {
        let streams = s.split(['+', ',']).map(str::trim).filter(|p| !p.is_empty()).map(Stream::from_str).collect::<Result<Vec<_>, _>>()?;
        if streams.is_empty() {
            return Err(format!("empty stream list {s:?}"));
        }
        Ok(Self::canonical(&streams))
    }
}

impl fmt::Display for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stream {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "body" => Ok(Stream::Body),
            "hand" => Ok(Stream::Hand),
            other => Err(format!("unknown stream {other:?} (expected body or hand)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassRecord {
    pub id: ClassId,
    pub name: String,
    pub description: Option<String>,
    /// Unit-norm text embedding of the class description.
    pub embedding: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord {
    pub id: String,
    pub class: ClassId,
    /// One `T×d` snippet-feature sequence per stream.
    pub streams: BTreeMap<Stream, Matrix>,
}

impl VideoRecord {
    pub fn sequence(&self, stream: Stream) -> Option<&Matrix> {
        self.streams.get(&stream)
    }

    /// Snippet count (shared by all streams of a valid video).
    pub fn len(&self) -> usize {
        self.streams.values().next().map_or(0, Matrix::rows)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Class-disjoint train/val/test partition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: BTreeSet<ClassId>,
    pub val: BTreeSet<ClassId>,
    pub test: BTreeSet<ClassId>,
}

impl SplitSpec {
    pub fn classes(&self, split: Split) -> &BTreeSet<ClassId> {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// First split containing `class`, in train/val/test order.
    pub fn split_of(&self, class: ClassId) -> Option<Split> {
        Split::ALL.into_iter().find(|s| self.classes(*s).contains(&class))
    }

    pub fn is_disjoint(&self) -> bool {
        self.train.is_disjoint(&self.val) && self.train.is_disjoint(&self.test) && self.val.is_disjoint(&self.test)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_dim: usize,
    embedding_dim: usize,
    streams: Vec<Stream>,
    classes: Vec<ClassRecord>,
    videos: Vec<VideoRecord>,
    split: SplitSpec,
}

impl Dataset {
    /// Builds a dataset, normalizing class embeddings and rejecting any
    /// structural violation.
    pub fn new(
        feature_dim: usize,
        embedding_dim: usize,
        streams: Vec<Stream>,
        mut classes: Vec<ClassRecord>,
        videos: Vec<VideoRecord>,
        split: SplitSpec,
    ) -> Result<Self, DataError> {
        let mut violations = Vec::new();
        for c in &mut classes {
            if c.embedding.dim() != embedding_dim {
                violations.push(Violation::EmbeddingDimMismatch { class: c.id, expected: embedding_dim, found: c.embedding.dim() });
                continue;
            }
            match l2_normalize(&c.embedding) {
                Ok(unit) => c.embedding = unit,
                Err(_) => violations.push(Violation::ZeroEmbedding { class: c.id }),
            }
        }
        let class_ids: Vec<ClassId> = classes.iter().map(|c| c.id).collect();
        let shapes: Vec<validate::VideoShape<'_>> = videos
            .iter()
            .map(|v| validate::VideoShape {
                id: &v.id,
                class: v.class,
                declared_split: None,
                streams: v.streams.iter().map(|(s, m)| (*s, Some(m.shape()))).collect(),
            })
            .collect();
        violations.extend(validate::check_structure(feature_dim, &streams, &class_ids, &shapes, &split));
        if !violations.is_empty() {
            return Err(DataError::Invalid(ValidationReport { violations }));
        }
        Ok(Self { feature_dim, embedding_dim, streams: Stream::canonical(&streams), classes, videos, split })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn streams(&self) -> &[Stream] {
        &self.streams
    }

    pub fn classes(&self) -> &[ClassRecord] {
        &self.classes
    }

    pub fn videos(&self) -> &[VideoRecord] {
        &self.videos
    }

    pub fn split(&self) -> &SplitSpec {
        &self.split
    }

    pub fn class(&self, id: ClassId) -> Option<&ClassRecord> {
        self.classes.iter().find(|c| c.id == id)
    }

    /// Classes of one split, in ascending id order.
    pub fn classes_in(&self, split: Split) -> Vec<&ClassRecord> {
        let ids = self.split.classes(split);
        let mut out: Vec<&ClassRecord> = self.classes.iter().filter(|c| ids.contains(&c.id)).collect();
        out.sort_by_key(|c| c.id);
        out
    }

    /// Videos whose class belongs to `split`, in manifest order.
    pub fn videos_in(&self, split: Split) -> Vec<&VideoRecord> {
        let ids = self.split.classes(split);
        self.videos.iter().filter(|v| ids.contains(&v.class)).collect()
    }

    /// Restricts every video to a subset of its streams.
    pub fn with_streams(&self, streams: &[Stream]) -> Result<Self, DataError> {
        let streams = Stream::canonical(streams);
        if let Some(s) = streams.iter().find(|s| !self.streams.contains(s)) {
            return Err(DataError::InvalidConfig(format!("dataset has no {s} stream")));
        }
        let videos = self
            .videos
            .iter()
            .map(|v| VideoRecord {
                id: v.id.clone(),
                class: v.class,
                streams: v.streams.iter().filter(|(s, _)| streams.contains(s)).map(|(s, m)| (*s, m.clone())).collect(),
            })
            .collect();
        Ok(Self { streams, videos, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(id: u32, e: Vec<f64>) -> ClassRecord {
        ClassRecord { id: ClassId(id), name: format!("c{id}"), description: None, embedding: Vector::new(e).unwrap() }
    }

    fn video(id: &str, class: u32, body: Matrix) -> VideoRecord {
        VideoRecord { id: id.into(), class: ClassId(class), streams: BTreeMap::from([(Stream::Body, body)]) }
    }

    fn split(train: &[u32], val: &[u32], test: &[u32]) -> SplitSpec {
        let set = |v: &[u32]| v.iter().map(|&i| ClassId(i)).collect();
        SplitSpec { train: set(train), val: set(val), test: set(test) }
    }

    #[test]
    fn embeddings_normalized_at_construction() {
        let ds = Dataset::new(
            2,
            2,
            vec![Stream::Body],
            vec![class(0, vec![3.0, 4.0]), class(1, vec![0.0, 2.0]), class(2, vec![1.0, 0.0])],
            vec![video("a", 0, Matrix::zeros(3, 2)), video("b", 1, Matrix::zeros(3, 2)), video("c", 2, Matrix::zeros(1, 2))],
            split(&[0], &[1], &[2]),
        )
        .unwrap();
        assert_eq!(ds.class(ClassId(0)).unwrap().embedding.as_slice(), &[0.6, 0.8]);
        assert_eq!(ds.classes_in(Split::Val).len(), 1);
        assert_eq!(ds.videos_in(Split::Test)[0].id, "c");
    }

    #[test]
    fn overlap_and_zero_embedding_rejected() {
        let err = Dataset::new(
            2,
            2,
            vec![Stream::Body],
            vec![class(0, vec![0.0, 0.0]), class(1, vec![0.0, 2.0])],
            vec![video("a", 0, Matrix::zeros(3, 2)), video("b", 1, Matrix::zeros(3, 2))],
            split(&[0, 1], &[1], &[0]),
        )
        .unwrap_err();
        let DataError::Invalid(report) = err else { panic!("expected invalid") };
        assert!(report.violations.iter().any(|v| matches!(v, Violation::ZeroEmbedding { .. })));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::SplitOverlap { .. })));
    }

    #[test]
    fn stream_parsing() {
        assert_eq!(Stream::parse_list("hand+body").unwrap(), vec![Stream::Body, Stream::Hand]);
        assert_eq!(Stream::label(&[Stream::Hand, Stream::Body]), "body+hand");
        assert!(Stream::parse_list("face").is_err());
    }
}
