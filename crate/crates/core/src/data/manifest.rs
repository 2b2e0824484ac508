//! TOML dataset manifest. See `docs/manifest.md` for the schema.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{read_class_embedding_file, read_feature_file, read_header, write_class_embedding_file, write_feature_file};
use super::validate::{check_structure, VideoShape};
use super::{ClassId, ClassRecord, DataError, Dataset, Split, SplitSpec, Stream, ValidationReport, VideoRecord, Violation, FEATURE_MAGIC};
use crate::numerics::{Matrix, Vector};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub feature_dim: usize,
    pub embedding_dim: usize,
    pub streams: Vec<Stream>,
    /// `ZSC1` file with one row per entry of `classes`, in the same order.
    pub class_embeddings: PathBuf,
    pub split: ManifestSplit,
    pub classes: Vec<ManifestClass>,
    pub videos: Vec<ManifestVideo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSplit {
    pub train: Vec<ClassId>,
    pub val: Vec<ClassId>,
    pub test: Vec<ClassId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestClass {
    pub id: ClassId,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestVideo {
    pub id: String,
    pub class: ClassId,
    /// Optional cross-check; must agree with the split of `class`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    /// `ZSF1` file per stream, relative to the manifest directory.
    pub streams: BTreeMap<Stream, PathBuf>,
}

impl DatasetManifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self, DataError> {
        toml::from_str(text).map_err(|e| DataError::Manifest { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train: self.split.train.iter().copied().collect(),
            val: self.split.val.iter().copied().collect(),
            test: self.split.test.iter().copied().collect(),
        }
    }

    /// Checks every structural rule plus file existence and header dims,
    /// reading only file headers and the class-embedding file.
    pub fn validate(&self, base: &Path) -> ValidationReport {
        let mut violations = Vec::new();
        let class_ids: Vec<ClassId> = self.classes.iter().map(|c| c.id).collect();

        let emb_path = base.join(&self.class_embeddings);
        match read_embeddings(&emb_path) {
            Ok(m) => violations.extend(embedding_violations(self, &m)),
            Err(v) => violations.push(v),
        }

        let shapes: Vec<(VideoShape<'_>, Vec<Violation>)> = self
            .videos
            .par_iter()
            .map(|v| {
                let mut file_violations = Vec::new();
                let streams = v
                    .streams
                    .iter()
                    .map(|(s, rel)| {
                        let path = base.join(rel);
                        let shape = match read_header(FEATURE_MAGIC, &path) {
                            Ok(dims) => Some(dims),
                            Err(e) => {
                                file_violations.push(file_violation(&path, &e));
                                None
                            }
                        };
                        (*s, shape)
                    })
                    .collect();
                (VideoShape { id: &v.id, class: v.class, declared_split: v.split, streams }, file_violations)
            })
            .collect();
        let mut views = Vec::with_capacity(shapes.len());
        for (view, fv) in shapes {
            violations.extend(fv);
            views.push(view);
        }
        violations.extend(check_structure(self.feature_dim, &self.streams, &class_ids, &views, &self.split_spec()));
        ValidationReport { violations }
    }
}

fn read_embeddings(path: &Path) -> Result<Matrix, Violation> {
    read_class_embedding_file(path).map_err(|e| file_violation(path, &e))
}

fn file_violation(path: &Path, e: &DataError) -> Violation {
    match e {
        DataError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            Violation::MissingFile { path: path.to_path_buf() }
        }
        other => Violation::UnreadableFile { path: path.to_path_buf(), reason: other.to_string() },
    }
}

fn embedding_violations(manifest: &DatasetManifest, m: &Matrix) -> Vec<Violation> {
    let mut out = Vec::new();
    if m.rows() != manifest.classes.len() {
        out.push(Violation::ClassEmbeddingCountMismatch { expected: manifest.classes.len(), found: m.rows() });
    }
    for (i, c) in manifest.classes.iter().enumerate().take(m.rows()) {
        if m.cols() != manifest.embedding_dim {
            out.push(Violation::EmbeddingDimMismatch { class: c.id, expected: manifest.embedding_dim, found: m.cols() });
        } else if m.row(i).iter().all(|&x| x == 0.0) {
            out.push(Violation::ZeroEmbedding { class: c.id });
        }
    }
    out
}

fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Validates the manifest at `path`. Only an unreadable or unparsable
/// manifest is an error; every other problem is listed in the report.
pub fn validate_dataset(path: impl AsRef<Path>) -> Result<ValidationReport, DataError> {
    let path = path.as_ref();
    let manifest = DatasetManifest::read(path)?;
    Ok(manifest.validate(&base_dir(path)))
}

/// Loads and validates a dataset. Feature files are read in parallel.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let manifest = DatasetManifest::read(path)?;
    let base = base_dir(path);
    let report = manifest.validate(&base);
    if !report.is_valid() {
        return Err(DataError::Invalid(report));
    }
    let embeddings = read_class_embedding_file(base.join(&manifest.class_embeddings))?;
    let classes = manifest
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Ok(ClassRecord {
                id: c.id,
                name: c.name.clone(),
                description: c.description.clone(),
                embedding: Vector::new(embeddings.row(i).to_vec())?,
            })
        })
        .collect::<Result<Vec<_>, DataError>>()?;
    let videos = manifest
        .videos
        .par_iter()
        .map(|v| {
            let streams = v
                .streams
                .iter()
                .map(|(s, rel)| Ok((*s, read_feature_file(base.join(rel))?)))
                .collect::<Result<BTreeMap<_, _>, DataError>>()?;
            Ok(VideoRecord { id: v.id.clone(), class: v.class, streams })
        })
        .collect::<Result<Vec<_>, DataError>>()?;
    Dataset::new(manifest.feature_dim, manifest.embedding_dim, manifest.streams.clone(), classes, videos, manifest.split_spec())
}

fn file_stem(index: usize, id: &str) -> String {
    let clean: String = id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    format!("{index:06}_{clean}")
}

/// Writes `dataset` under `dir` as `manifest.toml`, `classes.zsc1` and
/// `features/*.zsf1`; returns the manifest path.
pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<PathBuf, DataError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| DataError::Io { path: dir.to_path_buf(), source })?;
    let emb_rows: Vec<&[f64]> = dataset.classes().iter().map(|c| c.embedding.as_slice()).collect();
    let emb = Matrix::from_rows(&emb_rows)?;
    let emb_rel = PathBuf::from("classes.zsc1");
    write_class_embedding_file(dir.join(&emb_rel), &emb)?;

    let split = dataset.split();
    let mut videos = Vec::with_capacity(dataset.videos().len());
    for (i, v) in dataset.videos().iter().enumerate() {
        let stem = file_stem(i, &v.id);
        let mut streams = BTreeMap::new();
        for (s, m) in &v.streams {
            let rel = PathBuf::from("features").join(format!("{stem}.{}.zsf1", s.name()));
            write_feature_file(dir.join(&rel), m)?;
            streams.insert(*s, rel);
        }
        videos.push(ManifestVideo { id: v.id.clone(), class: v.class, split: split.split_of(v.class), streams });
    }
    let manifest = DatasetManifest {
        feature_dim: dataset.feature_dim(),
        embedding_dim: dataset.embedding_dim(),
        streams: dataset.streams().to_vec(),
        class_embeddings: emb_rel,
        split: ManifestSplit {
            train: split.train.iter().copied().collect(),
            val: split.val.iter().copied().collect(),
            test: split.test.iter().copied().collect(),
        },
        classes: dataset
            .classes()
            .iter()
            .map(|c| ManifestClass { id: c.id, name: c.name.clone(), description: c.description.clone() })
            .collect(),
        videos,
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_toml()).map_err(|source| DataError::Io { path: path.clone(), source })?;
    Ok(path)
}
