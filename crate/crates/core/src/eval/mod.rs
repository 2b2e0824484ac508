//! Per-class normalized top-k accuracy, random baselines, the repeated-run
//! experiment protocol and report rendering.

mod metrics;
mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ClassId, ClassRecord, DataError, Dataset, Split, Stream};
use crate::zsl::{fit_model, rank_videos, CompatibilityModel, ModelKind, ModelSpec, TrainConfig, ZslError};

pub use metrics::{per_class_topk, random_baseline, topk_normalized_accuracy, BaselineEntry, RandomBaseline};
pub use report::{format_report, parse_report_csv, percent, CsvRow, FormattedReport, CSV_HEADER};

/// Regularizer values tried by model selection.
pub const DEFAULT_GRID: [f64; 5] = [0.0, 1e-4, 1e-3, 1e-2, 1e-1];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k must be at least 1 (got {0})")]
    InvalidK(usize),
    #[error("k = {k} exceeds the {classes} candidate classes")]
    KExceedsClasses { k: usize, classes: usize },
    #[error("video {index} has no ranking")]
    MissingRanking { index: usize },
    #[error("true class {class} of video {index} is not among its ranked candidates")]
    LabelNotRanked { index: usize, class: ClassId },
    #[error("no videos to evaluate")]
    NoVideos,
    #[error("no reports to format")]
    NoReports,
    #[error("inconsistent k sets across reports: {expected:?} vs {found:?}")]
    InconsistentKs { expected: Vec<usize>, found: Vec<usize> },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("CSV: {0}")]
    Csv(String),
    #[error("run {run} (seed {seed}): {source}")]
    Run {
        run: usize,
        seed: u64,
        #[source]
        source: ZslError,
    },
    #[error("no grid point could be fitted: {0}")]
    GridExhausted(String),
    #[error(transparent)]
    Zsl(#[from] ZslError),
    #[error(transparent)]
    Data(#[from] DataError),
}

impl EvalError {
    pub fn is_numeric(&self) -> bool {
        match self {
            EvalError::Zsl(e) | EvalError::Run { source: e, .. } => e.is_numeric(),
            EvalError::GridExhausted(_) => true,
            _ => false,
        }
    }
}

/// Accuracies of one model on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// Normalized top-k per requested k.
    pub topk: Vec<f64>,
    /// Per-class top-k per requested k.
    pub per_class: BTreeMap<ClassId, Vec<f64>>,
    pub num_candidates: usize,
    /// Split classes without any video; left out of the average.
    pub excluded_classes: Vec<ClassId>,
}

/// Candidates for `split`: its own classes, or every class when `widen` is set.
pub fn candidates(dataset: &Dataset, split: Split, widen: bool) -> Vec<ClassRecord> {
    if widen {
        let mut all = dataset.classes().to_vec();
        all.sort_by_key(|c| c.id);
        all
    } else {
        dataset.classes_in(split).into_iter().cloned().collect()
    }
}

/// Ranks every video of `split` and scores it at each `k`.
pub fn evaluate_split(
    model: &CompatibilityModel,
    dataset: &Dataset,
    split: Split,
    ks: &[usize],
    widen: bool,
) -> Result<RunMetrics, EvalError> {
    let cands = candidates(dataset, split, widen);
    let videos = dataset.videos_in(split);
    let labels: Vec<ClassId> = videos.iter().map(|v| v.class).collect();
    let rankings = rank_videos(model, &videos, &cands)?;
    let mut per_class: BTreeMap<ClassId, Vec<f64>> = BTreeMap::new();
    let mut topk = Vec::with_capacity(ks.len());
    for &k in ks {
        let pc = per_class_topk(&rankings, &labels, k)?;
        topk.push(pc.values().sum::<f64>() / pc.len() as f64);
        for (c, v) in pc {
            per_class.entry(c).or_default().push(v);
        }
    }
    let excluded_classes: Vec<ClassId> = dataset.split().classes(split).iter().copied().filter(|c| !per_class.contains_key(c)).collect();
    if !excluded_classes.is_empty() {
        log::warn!("{split} classes without videos are excluded from the average: {excluded_classes:?}");
    }
    Ok(RunMetrics { topk, per_class, num_candidates: cands.len(), excluded_classes })
}

/// Aggregate of one split over repeated runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSummary {
    pub split: Split,
    pub num_candidates: usize,
    /// `runs × ks` normalized accuracies.
    pub per_run: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Sample standard deviation; 0 for a single run.
    pub std: Vec<f64>,
    /// Per-class accuracy per k, averaged over runs.
    pub per_class: BTreeMap<ClassId, Vec<f64>>,
}

impl SplitSummary {
    pub fn from_runs(split: Split, runs: &[RunMetrics]) -> Self {
        let n = runs.len();
        let nk = runs.first().map_or(0, |r| r.topk.len());
        let per_run: Vec<Vec<f64>> = runs.iter().map(|r| r.topk.clone()).collect();
        // Centered on the first run so identical runs give that value exactly.
        let mean: Vec<f64> = (0..nk)
            .map(|i| {
                let first = per_run[0][i];
                first + per_run.iter().map(|r| r[i] - first).sum::<f64>() / n as f64
            })
            .collect();
        let std = (0..nk)
            .map(|i| if n < 2 { 0.0 } else { (per_run.iter().map(|r| (r[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() })
            .collect();
        let mut per_class: BTreeMap<ClassId, Vec<f64>> = BTreeMap::new();
        for r in runs {
            for (c, v) in &r.per_class {
                let acc = per_class.entry(*c).or_insert_with(|| vec![0.0; nk]);
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += x / n as f64;
                }
            }
        }
        Self { split, num_candidates: runs.first().map_or(0, |r| r.num_candidates), per_run, mean, std, per_class }
    }
}

/// Regularizers used by one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selected {
    pub lambda: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub encoder: String,
    pub streams: String,
    pub ks: Vec<usize>,
    pub runs: usize,
    pub val: SplitSummary,
    pub test: SplitSummary,
    pub excluded_classes: Vec<ClassId>,
    pub selected: Vec<Selected>,
}

impl EvalReport {
    /// Report for a single already-fitted model.
    pub fn for_model(model: &CompatibilityModel, dataset: &Dataset, ks: &[usize], widen: bool) -> Result<Self, EvalError> {
        let ks = check_ks(ks)?;
        let val = evaluate_split(model, dataset, Split::Val, &ks, widen)?;
        let test = evaluate_split(model, dataset, Split::Test, &ks, widen)?;
        let cfg = model.encoder_config();
        Ok(Self {
            method: model.kind.label().into(),
            encoder: cfg.kind.name().into(),
            streams: Stream::label(&cfg.streams),
            ks,
            runs: 1,
            excluded_classes: test.excluded_classes.clone(),
            val: SplitSummary::from_runs(Split::Val, &[val]),
            test: SplitSummary::from_runs(Split::Test, &[test]),
            selected: Vec::new(),
        })
    }

    /// Mean normalized accuracy on `split` at `k`, if `k` was evaluated.
    pub fn mean(&self, split: Split, k: usize) -> Option<f64> {
        let i = self.ks.iter().position(|&x| x == k)?;
        match split {
            Split::Val => Some(self.val.mean[i]),
            Split::Test => Some(self.test.mean[i]),
            Split::Train => None,
        }
    }
}

/// Sorted, de-duplicated, all ≥ 1.
pub fn check_ks(ks: &[usize]) -> Result<Vec<usize>, EvalError> {
    let mut out = ks.to_vec();
    out.sort_unstable();
    out.dedup();
    match out.first() {
        None => Err(EvalError::InvalidConfig("no k values requested".into())),
        Some(0) => Err(EvalError::InvalidK(0)),
        _ => Ok(out),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub runs: usize,
    pub ks: Vec<usize>,
    /// Run `r` trains with seed `seed + r`.
    pub seed: u64,
    /// Choose λ (and γ for ESZSL) from [`DEFAULT_GRID`] by validation top-1.
    pub grid_search: bool,
    /// Rank against every class instead of only the split's own.
    pub widen_candidates: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { runs: 5, ks: vec![1, 2, 5], seed: 0, grid_search: false, widen_candidates: false }
    }
}

/// One point of a model-selection grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    pub gamma: f64,
    /// `None` when the fit failed numerically (e.g. singular Gram matrix).
    pub val_top1: Option<f64>,
}

/// Fits `spec` at every grid point and keeps the best validation top-1; ties
/// go to the earlier point. SAE skips `λ = 0`, where it is undefined.
pub fn select_hyperparameters(dataset: &Dataset, spec: &ModelSpec, grid: &[f64]) -> Result<(TrainConfig, Vec<GridPoint>), EvalError> {
    let lambdas: Vec<f64> = grid.iter().copied().filter(|&l| spec.kind != ModelKind::Sae || l > 0.0).collect();
    let gammas: Vec<f64> = if spec.kind == ModelKind::Eszsl { grid.to_vec() } else { vec![spec.train.gamma] };
    let mut points = Vec::new();
    let mut best: Option<(f64, TrainConfig)> = None;
    let mut last_error = String::from("empty grid");
    for &gamma in &gammas {
        for &lambda in &lambdas {
            let train = TrainConfig { lambda, gamma, ..spec.train.clone() };
            let trial = ModelSpec { train: train.clone(), ..spec.clone() };
            let val_top1 = match fit_model(dataset, &trial) {
                Ok((model, _)) => Some(evaluate_split(&model, dataset, Split::Val, &[1], false)?.topk[0]),
                Err(e) if e.is_numeric() => {
                    log::info!("grid point λ = {lambda}, γ = {gamma} skipped: {e}");
                    last_error = e.to_string();
                    None
                }
                Err(e) => return Err(e.into()),
            };
            if let Some(v) = val_top1 {
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, train));
                }
            }
            points.push(GridPoint { lambda, gamma, val_top1 });
        }
    }
    let (_, chosen) = best.ok_or(EvalError::GridExhausted(last_error))?;
    Ok((chosen, points))
}

/// Trains and evaluates `spec` `config.runs` times with seeds
/// `seed, seed + 1, …` and aggregates validation and test accuracies.
pub fn run_experiment(dataset: &Dataset, spec: &ModelSpec, config: &ExperimentConfig) -> Result<EvalReport, EvalError> {
    if config.runs == 0 {
        return Err(EvalError::InvalidConfig("runs must be at least 1".into()));
    }
    let ks = check_ks(&config.ks)?;
    if dataset.videos_in(Split::Test).is_empty() {
        return Err(EvalError::NoVideos);
    }
    let dataset = dataset.with_streams(&spec.encoder.streams)?;
    let mut val_runs = Vec::with_capacity(config.runs);
    let mut test_runs = Vec::with_capacity(config.runs);
    let mut selected = Vec::with_capacity(config.runs);
    for run in 0..config.runs {
        let seed = config.seed.wrapping_add(run as u64);
        let wrap = |source| EvalError::Run { run, seed, source };
        let mut run_spec = spec.clone();
        run_spec.train.seed = seed;
        if config.grid_search {
            let (train, _) = select_hyperparameters(&dataset, &run_spec, &DEFAULT_GRID).map_err(|e| match e {
                EvalError::Zsl(source) => wrap(source),
                other => other,
            })?;
            run_spec.train = train;
        }
        let (model, _) = fit_model(&dataset, &run_spec).map_err(wrap)?;
        selected.push(Selected { lambda: run_spec.train.lambda, gamma: run_spec.train.gamma });
        val_runs.push(evaluate_split(&model, &dataset, Split::Val, &ks, config.widen_candidates)?);
        test_runs.push(evaluate_split(&model, &dataset, Split::Test, &ks, config.widen_candidates)?);
    }
    Ok(EvalReport {
        method: spec.kind.label().into(),
        encoder: spec.encoder.kind.name().into(),
        streams: Stream::label(&spec.encoder.streams),
        ks,
        runs: config.runs,
        excluded_classes: test_runs[0].excluded_classes.clone(),
        val: SplitSummary::from_runs(Split::Val, &val_runs),
        test: SplitSummary::from_runs(Split::Test, &test_runs),
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let run = |v: f64| RunMetrics { topk: vec![v], per_class: BTreeMap::new(), num_candidates: 3, excluded_classes: vec![] };
        let s = SplitSummary::from_runs(Split::Test, &[run(0.2), run(0.4)]);
        assert!((s.mean[0] - 0.3).abs() < 1e-15);
        assert!((s.std[0] - (0.02f64).sqrt()).abs() < 1e-15);
        let one = SplitSummary::from_runs(Split::Test, &[run(0.7)]);
        assert_eq!((one.mean[0], one.std[0]), (0.7, 0.0));
    }

    #[test]
    fn ks_are_normalized() {
        assert_eq!(check_ks(&[5, 1, 2, 1]).unwrap(), vec![1, 2, 5]);
        assert!(check_ks(&[]).is_err());
        assert!(check_ks(&[0, 1]).is_err());
    }
}
