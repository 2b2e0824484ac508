use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use super::{ClassId, Split, SplitSpec, Stream};

/// One structural problem found in a dataset or manifest.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SplitOverlap { class: ClassId, first: Split, second: Split },
    EmptySplit { split: Split },
    SplitWithoutVideos { split: Split },
    SplitReferencesUnknownClass { split: Split, class: ClassId },
    ClassNotInAnySplit { class: ClassId },
    DuplicateClassId { class: ClassId },
    DuplicateVideoId { video: String },
    NoStreamsDeclared,
    UnknownClass { video: String, class: ClassId },
    VideoSplitMismatch { video: String, declared: Split, actual: Split },
    MissingStream { video: String, stream: Stream },
    UndeclaredStream { video: String, stream: Stream },
    EmptySequence { video: String, stream: Stream },
    FeatureDimMismatch { video: String, stream: Stream, expected: usize, found: usize },
    StreamLengthMismatch { video: String, lengths: Vec<(Stream, usize)> },
    MissingFile { path: PathBuf },
    UnreadableFile { path: PathBuf, reason: String },
    ClassEmbeddingCountMismatch { expected: usize, found: usize },
    EmbeddingDimMismatch { class: ClassId, expected: usize, found: usize },
    ZeroEmbedding { class: ClassId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            SplitOverlap { class, first, second } => write!(f, "split-overlap: class {class} is in both {first} and {second}"),
            EmptySplit { split } => write!(f, "empty-split: {split} has no classes"),
            SplitWithoutVideos { split } => write!(f, "empty-split: {split} has no videos"),
            SplitReferencesUnknownClass { split, class } => write!(f, "unknown-class: {split} split lists undeclared class {class}"),
            ClassNotInAnySplit { class } => write!(f, "split-coverage: class {class} has videos but belongs to no split"),
            DuplicateClassId { class } => write!(f, "duplicate-class: class id {class} declared more than once"),
            DuplicateVideoId { video } => write!(f, "duplicate-video: video id {video:?} declared more than once"),
            NoStreamsDeclared => write!(f, "no-streams: the dataset declares no feature streams"),
            UnknownClass { video, class } => write!(f, "unknown-class: video {video:?} references undeclared class {class}"),
            VideoSplitMismatch { video, declared, actual } => {
                write!(f, "split-mismatch: video {video:?} is declared {declared} but its class is in {actual}")
            }
            MissingStream { video, stream } => write!(f, "missing-stream: video {video:?} has no {stream} stream"),
            UndeclaredStream { video, stream } => write!(f, "undeclared-stream: video {video:?} carries undeclared {stream} stream"),
            EmptySequence { video, stream } => write!(f, "empty-sequence: video {video:?} {stream} stream has no snippets"),
            FeatureDimMismatch { video, stream, expected, found } => {
                write!(f, "dim-mismatch: video {video:?} {stream} stream has width {found}, expected {expected}")
            }
            StreamLengthMismatch { video, lengths } => {
                let parts: Vec<String> = lengths.iter().map(|(s, t)| format!("{s}={t}")).collect();
                write!(f, "length-mismatch: video {video:?} streams disagree in length ({})", parts.join(", "))
            }
            MissingFile { path } => write!(f, "missing-file: {}", path.display()),
            UnreadableFile { path, reason } => write!(f, "unreadable-file: {}: {reason}", path.display()),
            ClassEmbeddingCountMismatch { expected, found } => {
                write!(f, "embedding-count: expected {expected} class embedding rows, found {found}")
            }
            EmbeddingDimMismatch { class, expected, found } => {
                write!(f, "dim-mismatch: class {class} embedding has dim {found}, expected {expected}")
            }
            ZeroEmbedding { class } => write!(f, "zero-embedding: class {class} embedding cannot be normalized"),
        }
    }
}

/// Every violation found; empty iff the dataset is valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Shape-level view of one video, shared by the in-memory and manifest paths.
/// A stream shape of `None` means the file could not be read (already reported).
pub(crate) struct VideoShape<'a> {
    pub id: &'a str,
    pub class: ClassId,
    pub declared_split: Option<Split>,
    pub streams: Vec<(Stream, Option<(usize, usize)>)>,
}

pub(crate) fn check_structure(
    feature_dim: usize,
    streams: &[Stream],
    class_ids: &[ClassId],
    videos: &[VideoShape<'_>],
    split: &SplitSpec,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if streams.is_empty() {
        out.push(Violation::NoStreamsDeclared);
    }

    let mut known = BTreeSet::new();
    for &c in class_ids {
        if !known.insert(c) {
            out.push(Violation::DuplicateClassId { class: c });
        }
    }

    let pairs = [(Split::Train, Split::Val), (Split::Train, Split::Test), (Split::Val, Split::Test)];
    for (a, b) in pairs {
        for &class in split.classes(a).intersection(split.classes(b)) {
            out.push(Violation::SplitOverlap { class, first: a, second: b });
        }
    }
    for s in Split::ALL {
        let ids = split.classes(s);
        if ids.is_empty() {
            out.push(Violation::EmptySplit { split: s });
        }
        for &class in ids {
            if !known.contains(&class) {
                out.push(Violation::SplitReferencesUnknownClass { split: s, class });
            }
        }
    }

    let declared: BTreeSet<Stream> = streams.iter().copied().collect();
    let mut seen_videos = BTreeSet::new();
    let mut videos_per_split: BTreeMap<Split, usize> = BTreeMap::new();
    let mut uncovered = BTreeSet::new();
    for v in videos {
        if !seen_videos.insert(v.id) {
            out.push(Violation::DuplicateVideoId { video: v.id.to_string() });
        }
        if !known.contains(&v.class) {
            out.push(Violation::UnknownClass { video: v.id.to_string(), class: v.class });
        }
        match split.split_of(v.class) {
            Some(actual) => {
                *videos_per_split.entry(actual).or_default() += 1;
                if let Some(declared) = v.declared_split.filter(|d| *d != actual) {
                    out.push(Violation::VideoSplitMismatch { video: v.id.to_string(), declared, actual });
                }
            }
            None => {
                if known.contains(&v.class) {
                    uncovered.insert(v.class);
                }
            }
        }

        let present: BTreeSet<Stream> = v.streams.iter().map(|(s, _)| *s).collect();
        for &s in declared.difference(&present) {
            out.push(Violation::MissingStream { video: v.id.to_string(), stream: s });
        }
        let mut lengths = Vec::new();
        for &(s, shape) in &v.streams {
            if !declared.contains(&s) {
                out.push(Violation::UndeclaredStream { video: v.id.to_string(), stream: s });
                continue;
            }
            let Some((rows, cols)) = shape else { continue };
            if rows == 0 {
                out.push(Violation::EmptySequence { video: v.id.to_string(), stream: s });
            }
            if cols != feature_dim {
                out.push(Violation::FeatureDimMismatch { video: v.id.to_string(), stream: s, expected: feature_dim, found: cols });
            }
            lengths.push((s, rows));
        }
        if lengths.windows(2).any(|w| w[0].1 != w[1].1) {
            out.push(Violation::StreamLengthMismatch { video: v.id.to_string(), lengths });
        }
    }
    for class in uncovered {
        out.push(Violation::ClassNotInAnySplit { class });
    }
    for s in Split::ALL {
        if !split.classes(s).is_empty() && videos_per_split.get(&s).copied().unwrap_or(0) == 0 {
            out.push(Violation::SplitWithoutVideos { split: s });
        }
    }
    out
}
