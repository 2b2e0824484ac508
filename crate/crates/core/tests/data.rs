mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::benchmark_shaped_dataset;
use proptest::prelude::*;
use zsslr::data::{
    decode_matrix, encode_matrix, generate_synthetic, load_dataset, read_class_embedding_file, read_feature_file, validate_dataset,
    write_class_embedding_file, write_dataset, write_feature_file, ClassId, ClassRecord, DataError, Dataset, DatasetManifest, Split,
    SplitSpec, Stream, SyntheticConfig, VideoRecord, Violation, CLASS_EMBEDDING_MAGIC, FEATURE_MAGIC, MANIFEST_FILE,
};
use zsslr::numerics::{Matrix, Vector};

fn f32_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    Matrix::from_fn(rows, cols, |_, _| {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        f64::from((x >> 40) as f32 / (1u64 << 20) as f32 - 8.0)
    })
}

#[test]
fn files_round_trip_value_exact() {
    let dir = tempfile::tempdir().unwrap();
    let m = f32_matrix(1000, 1000, 3);
    let f = dir.path().join("big.zsf1");
    write_feature_file(&f, &m).unwrap();
    assert_eq!(read_feature_file(&f).unwrap(), m);
    let e = dir.path().join("c.zsc1");
    let emb = f32_matrix(7, 5, 4);
    write_class_embedding_file(&e, &emb).unwrap();
    assert_eq!(read_class_embedding_file(&e).unwrap(), emb);
    // The two formats are not interchangeable.
    assert!(matches!(read_feature_file(&e), Err(DataError::BadMagic { .. })));
}

#[test]
fn malformed_bytes_are_rejected() {
    let bytes = encode_matrix(FEATURE_MAGIC, &f32_matrix(3, 4, 1)).unwrap();
    assert_eq!(bytes.len(), 12 + 48);
    assert!(matches!(decode_matrix(FEATURE_MAGIC, &bytes[..30]), Err(DataError::Truncated { .. })));
    let mut long = bytes.clone();
    long.push(0);
    assert!(matches!(decode_matrix(FEATURE_MAGIC, &long), Err(DataError::TrailingBytes { .. })));
    let mut nan = bytes.clone();
    nan[12..16].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(matches!(decode_matrix(FEATURE_MAGIC, &nan), Err(DataError::NonFinite { index: 0 })));
    let mut huge = bytes;
    huge[4..8].copy_from_slice(&u32::MAX.to_le_bytes());
    huge[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
    assert!(matches!(decode_matrix(FEATURE_MAGIC, &huge), Err(DataError::DimensionOverflow { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn encode_decode_round_trip(rows in 0usize..1000, cols in 0usize..1000, seed in any::<u64>(), class_file in any::<bool>()) {
        let magic = if class_file { CLASS_EMBEDDING_MAGIC } else { FEATURE_MAGIC };
        let m = f32_matrix(rows, cols, seed);
        prop_assert_eq!(decode_matrix(magic, &encode_matrix(magic, &m).unwrap()).unwrap(), m);
    }
}

#[test]
fn benchmark_shaped_dataset_is_valid() {
    let ds = benchmark_shaped_dataset(0);
    let counts: Vec<(usize, usize)> =
        [Split::Train, Split::Val, Split::Test].iter().map(|&s| (ds.classes_in(s).len(), ds.videos_in(s).len())).collect();
    assert_eq!(counts, vec![(170, 1188), (30, 151), (50, 259)]);
    assert!(ds.split().is_disjoint());
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(&ds, dir.path()).unwrap();
    assert!(validate_dataset(&path).unwrap().is_valid());
    assert_eq!(load_dataset(&path).unwrap().videos(), ds.videos());
}

fn tiny_dataset(split: SplitSpec) -> Result<Dataset, DataError> {
    let classes: Vec<ClassRecord> = (0..6u32)
        .map(|i| ClassRecord {
            id: ClassId(i),
            name: format!("c{i}"),
            description: None,
            embedding: Vector::new(vec![1.0, i as f64]).unwrap(),
        })
        .collect();
    let videos = (0..6u32)
        .map(|i| VideoRecord {
            id: format!("v{i}"),
            class: ClassId(i),
            streams: BTreeMap::from([(Stream::Body, Matrix::filled(2, 3, i as f64))]),
        })
        .collect();
    Dataset::new(3, 2, vec![Stream::Body], classes, videos, split)
}

proptest! {
    #[test]
    fn overlapping_splits_are_rejected(assign in proptest::collection::vec(0u8..8, 6)) {
        // Each class lands in a subset of {train, val, test} given by three bits.
        let mut spec = SplitSpec::default();
        for (c, bits) in assign.iter().enumerate() {
            let id = ClassId(c as u32);
            if bits & 1 != 0 { spec.train.insert(id); }
            if bits & 2 != 0 { spec.val.insert(id); }
            if bits & 4 != 0 { spec.test.insert(id); }
        }
        let overlap = assign.iter().any(|b| b.count_ones() > 1);
        let result = tiny_dataset(spec.clone());
        prop_assert_eq!(spec.is_disjoint(), !overlap);
        match result {
            Ok(ds) => {
                prop_assert!(!overlap);
                let sets: Vec<BTreeSet<ClassId>> = [Split::Train, Split::Val, Split::Test]
                    .iter()
                    .map(|&s| ds.classes_in(s).iter().map(|c| c.id).collect())
                    .collect();
                prop_assert!(sets[0].is_disjoint(&sets[1]) && sets[0].is_disjoint(&sets[2]) && sets[1].is_disjoint(&sets[2]));
            }
            Err(DataError::Invalid(report)) => {
                let has_overlap = report.violations.iter().any(|v| matches!(v, Violation::SplitOverlap { .. }));
                prop_assert_eq!(has_overlap, overlap);
            }
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }
}

#[test]
fn manifest_with_overlap_reports_violation() {
    let synth = generate_synthetic(&SyntheticConfig {
        train_classes: 3,
        val_classes: 2,
        test_classes: 2,
        samples_per_class: 2,
        ..Default::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(&synth.dataset, dir.path()).unwrap();
    let mut manifest = DatasetManifest::read(&path).unwrap();
    let moved = manifest.split.train[0];
    manifest.split.test.push(moved);
    std::fs::write(&path, manifest.to_toml()).unwrap();
    let report = validate_dataset(&path).unwrap();
    assert!(report.violations.iter().any(|v| matches!(v, Violation::SplitOverlap { class, .. } if *class == moved)), "{report}");
    assert!(matches!(load_dataset(&path), Err(DataError::Invalid(_))));
}

#[test]
fn missing_feature_file_is_listed() {
    let synth = generate_synthetic(&SyntheticConfig {
        train_classes: 2,
        val_classes: 1,
        test_classes: 1,
        samples_per_class: 1,
        ..Default::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(&synth.dataset, dir.path()).unwrap();
    let manifest = DatasetManifest::read(&path).unwrap();
    let victim = dir.path().join(&manifest.videos[0].streams[&Stream::Body]);
    std::fs::remove_file(&victim).unwrap();
    let report = validate_dataset(dir.path().join(MANIFEST_FILE)).unwrap();
    assert!(report.violations.iter().any(|v| matches!(v, Violation::MissingFile { .. })), "{report}");
}

#[test]
fn synthetic_generation_is_seeded() {
    let c = SyntheticConfig { seed: 12, noise: 0.1, ..Default::default() };
    let a = generate_synthetic(&c).unwrap();
    let b = generate_synthetic(&c).unwrap();
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.planting, b.planting);
    let other = generate_synthetic(&SyntheticConfig { seed: 13, ..c }).unwrap();
    assert_ne!(a.planting, other.planting);
}
