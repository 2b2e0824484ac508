mod common;

use common::naive_topk;
use proptest::prelude::*;
use zsslr::data::{generate_synthetic, ClassId, Split, Stream, SyntheticConfig};
use zsslr::encoders::{EncoderConfig, EncoderKind};
use zsslr::eval::{
    format_report, parse_report_csv, percent, random_baseline, run_experiment, select_hyperparameters, topk_normalized_accuracy, EvalError,
    ExperimentConfig, DEFAULT_GRID,
};
use zsslr::zsl::{ModelKind, ModelSpec, TrainConfig};

/// Random rankings over `c` candidates with labels covering every class.
fn rankings_strategy() -> impl Strategy<Value = (usize, Vec<Vec<ClassId>>, Vec<ClassId>)> {
    (2usize..12).prop_flat_map(|c| {
        let ranking = Just((0..c as u32).map(ClassId).collect::<Vec<_>>()).prop_shuffle();
        let n = c..4 * c;
        (Just(c), proptest::collection::vec((ranking, 0..c as u32), n)).prop_map(|(c, rows)| {
            let (mut rankings, mut labels): (Vec<_>, Vec<_>) = rows.into_iter().map(|(r, l)| (r, ClassId(l))).unzip();
            // Guarantee one video per class so every class counts.
            for (i, l) in labels.iter_mut().take(c).enumerate() {
                *l = ClassId(i as u32);
            }
            rankings.truncate(labels.len());
            (c, rankings, labels)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn metric_properties((c, rankings, labels) in rankings_strategy(), dup in 0usize..12, times in 1usize..4) {
        let acc: Vec<f64> = (1..=c).map(|k| topk_normalized_accuracy(&rankings, &labels, k).unwrap()).collect();
        for (k, a) in acc.iter().enumerate() {
            prop_assert!((a - naive_topk(&rankings, &labels, k + 1)).abs() < 1e-12);
        }
        prop_assert!(acc.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(acc[c - 1], 1.0);

        // Repeat every sample of one class; the balanced metric must not move.
        let target = ClassId((dup % c) as u32);
        let (mut r2, mut l2) = (rankings.clone(), labels.clone());
        for (r, l) in rankings.iter().zip(&labels) {
            if *l == target {
                for _ in 0..times {
                    r2.push(r.clone());
                    l2.push(*l);
                }
            }
        }
        for k in 1..=c {
            prop_assert!((topk_normalized_accuracy(&r2, &l2, k).unwrap() - acc[k - 1]).abs() < 1e-12);
        }
    }
}

#[test]
fn metric_errors() {
    let r = vec![vec![ClassId(0), ClassId(1)]];
    assert!(matches!(topk_normalized_accuracy(&r, &[ClassId(0)], 0), Err(EvalError::InvalidK(0))));
    assert!(matches!(topk_normalized_accuracy(&r, &[ClassId(5)], 1), Err(EvalError::LabelNotRanked { .. })));
    assert!(matches!(topk_normalized_accuracy(&r, &[ClassId(0), ClassId(1)], 1), Err(EvalError::MissingRanking { index: 1 })));
}

#[test]
fn random_baseline_rows() {
    let b = random_baseline(50, &[1, 2, 5], 10_000, 0).unwrap();
    let shown: Vec<String> = b.entries.iter().map(|e| percent(e.analytic)).collect();
    assert_eq!(shown, ["2.0", "4.0", "10.0"]);
    for e in &b.entries {
        assert!((e.monte_carlo - e.analytic).abs() * 100.0 <= 0.5, "{e:?}");
    }
    assert_eq!(percent(random_baseline(30, &[1], 100, 0).unwrap().entries[0].analytic), "3.3");
    assert!(random_baseline(3, &[5], 10, 0).is_err());
}

fn dataset() -> zsslr::data::Dataset {
    generate_synthetic(&SyntheticConfig { streams: vec![Stream::Body, Stream::Hand], noise: 0.3, seed: 2, ..Default::default() })
        .unwrap()
        .dataset
}

fn spec(kind: ModelKind, lambda: f64) -> ModelSpec {
    ModelSpec {
        kind,
        encoder: EncoderConfig::new(EncoderKind::AvgPool, &[Stream::Body, Stream::Hand]),
        train: TrainConfig { lambda, max_epochs: 30, ..Default::default() },
    }
}

#[test]
fn deterministic_models_have_zero_spread() {
    let ds = dataset();
    let r = run_experiment(&ds, &spec(ModelKind::Eszsl, 1e-3), &ExperimentConfig { runs: 3, ..Default::default() }).unwrap();
    assert!(r.val.std.iter().chain(&r.test.std).all(|&s| s == 0.0));
    assert_eq!(r.test.per_run.len(), 3);
    let one = run_experiment(&ds, &spec(ModelKind::Lle, 1e-4), &ExperimentConfig { runs: 1, ..Default::default() }).unwrap();
    assert!(one.test.std.iter().all(|&s| s == 0.0));
    assert_eq!(one.test.num_candidates, 10);
    assert!(matches!(
        run_experiment(&ds, &spec(ModelKind::Lle, 1e-4), &ExperimentConfig { runs: 0, ..Default::default() }),
        Err(EvalError::InvalidConfig(_))
    ));
}

#[test]
fn experiment_mean_is_mean_of_runs() {
    let ds = dataset();
    let r = run_experiment(&ds, &spec(ModelKind::Lle, 1e-4), &ExperimentConfig { runs: 3, ..Default::default() }).unwrap();
    for (i, m) in r.test.mean.iter().enumerate() {
        let avg = r.test.per_run.iter().map(|run| run[i]).sum::<f64>() / 3.0;
        assert!((m - avg).abs() < 1e-14);
    }
    assert_eq!(r.mean(Split::Test, 2), Some(r.test.mean[1]));
}

#[test]
fn csv_report_reparses_exactly() {
    let ds = dataset();
    let cfg = ExperimentConfig { runs: 2, ..Default::default() };
    let reports: Vec<_> =
        [(ModelKind::Lle, 1e-4), (ModelKind::Sae, 1.0)].iter().map(|&(k, l)| run_experiment(&ds, &spec(k, l), &cfg).unwrap()).collect();
    let out = format_report(&reports).unwrap();
    let rows = parse_report_csv(&out.csv).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3);
    let mut i = 0;
    for r in &reports {
        for s in [&r.val, &r.test] {
            for (j, k) in r.ks.iter().enumerate() {
                let row = &rows[i];
                assert_eq!((row.method.as_str(), row.split, row.k, row.runs), (r.method.as_str(), s.split, *k, 2));
                assert_eq!(row.accuracy_mean, percent(s.mean[j]).parse::<f64>().unwrap());
                i += 1;
            }
        }
    }
    // Re-rendering the parsed rows reproduces the file byte for byte.
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row).unwrap();
    }
    let again = String::from_utf8(w.into_inner().unwrap()).unwrap();
    assert_eq!(again, out.csv);
}

#[test]
fn grid_search_skips_undefined_points() {
    let ds = dataset();
    let (chosen, points) = select_hyperparameters(&ds, &spec(ModelKind::Sae, 1.0), &DEFAULT_GRID).unwrap();
    assert_eq!(points.len(), DEFAULT_GRID.len() - 1);
    assert!(chosen.lambda > 0.0);
    let (_, points) = select_hyperparameters(&ds, &spec(ModelKind::Eszsl, 1e-3), &DEFAULT_GRID).unwrap();
    assert_eq!(points.len(), DEFAULT_GRID.len() * DEFAULT_GRID.len());
    let best = points.iter().filter_map(|p| p.val_top1).fold(0.0, f64::max);
    assert!(best > 0.5);
}
