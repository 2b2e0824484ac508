use std::collections::BTreeMap;

use rand::Rng;

use super::EvalError;
use crate::data::ClassId;
use crate::rng::{stream_rng, Domain};

/// Per-class top-`k` hit rate: for each class, the fraction of its videos
/// whose true class is among the first `k` ranked candidates.
pub fn per_class_topk(rankings: &[Vec<ClassId>], labels: &[ClassId], k: usize) -> Result<BTreeMap<ClassId, f64>, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK(k));
    }
    if rankings.len() != labels.len() {
        return Err(EvalError::MissingRanking { index: rankings.len().min(labels.len()) });
    }
    if labels.is_empty() {
        return Err(EvalError::NoVideos);
    }
    let mut counts: BTreeMap<ClassId, (usize, usize)> = BTreeMap::new();
    for (index, (ranking, &label)) in rankings.iter().zip(labels).enumerate() {
        if ranking.is_empty() {
            return Err(EvalError::MissingRanking { index });
        }
        let pos = ranking.iter().position(|c| *c == label).ok_or(EvalError::LabelNotRanked { index, class: label })?;
        let e = counts.entry(label).or_default();
        e.0 += (pos < k) as usize;
        e.1 += 1;
    }
    Ok(counts.into_iter().map(|(c, (hits, total))| (c, hits as f64 / total as f64)).collect())
}

/// Top-`k` accuracy averaged uniformly over classes, so every class counts the
/// same regardless of how many videos it has.
pub fn topk_normalized_accuracy(rankings: &[Vec<ClassId>], labels: &[ClassId], k: usize) -> Result<f64, EvalError> {
    let per_class = per_class_topk(rankings, labels, k)?;
    Ok(per_class.values().sum::<f64>() / per_class.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineEntry {
    pub k: usize,
    /// `k / N`.
    pub analytic: f64,
    pub monte_carlo: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomBaseline {
    pub num_classes: usize,
    pub runs: usize,
    pub entries: Vec<BaselineEntry>,
}

/// Chance-level normalized top-`k` accuracy over `num_classes` candidates,
/// analytically and by averaging `runs` rounds of uniformly random rankings
/// (one video per class per round).
pub fn random_baseline(num_classes: usize, ks: &[usize], runs: usize, seed: u64) -> Result<RandomBaseline, EvalError> {
    if num_classes == 0 || runs == 0 {
        return Err(EvalError::InvalidConfig("num_classes and runs must be at least 1".into()));
    }
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > num_classes) {
        return Err(if k == 0 { EvalError::InvalidK(k) } else { EvalError::KExceedsClasses { k, classes: num_classes } });
    }
    let mut hits = vec![0u64; ks.len()];
    for run in 0..runs {
        let mut rng = stream_rng(seed, Domain::RandomBaseline, run as u64);
        for _ in 0..num_classes {
            // Under a uniform ranking the true class's rank is uniform.
            let pos = rng.random_range(0..num_classes);
            for (h, &k) in hits.iter_mut().zip(ks) {
                *h += (pos < k) as u64;
            }
        }
    }
    let total = (runs * num_classes) as f64;
    let entries = ks
        .iter()
        .zip(&hits)
        .map(|(&k, &h)| BaselineEntry { k, analytic: k as f64 / num_classes as f64, monte_carlo: h as f64 / total })
        .collect();
    Ok(RandomBaseline { num_classes, runs, entries })
}
