//! Ranking metrics for the intrinsic study, retention metrics for the filter
//! study, and the fuzzy matcher that locates gold actions among candidates.

pub mod matcher;
pub mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use matcher::{gold_match, normalize, MatcherConfig};
pub use report::{
    render_filter_table, render_intrinsic_table, FilterMetrics, FilterReport, IntrinsicMetrics,
    IntrinsicReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub positive_score: f64,
    pub negative_scores: Vec<f64>,
}

impl ScoredInstance {
    pub fn new(positive_score: f64, negative_scores: Vec<f64>) -> Self {
        ScoredInstance {
            positive_score,
            negative_scores,
        }
    }
}

/// Pessimistic rank: negatives tied with the positive are ranked above it.
pub fn rank_of_positive(inst: &ScoredInstance) -> usize {
    1 + inst
        .negative_scores
        .iter()
        .filter(|&&n| n >= inst.positive_score)
        .count()
}

fn nonempty<T>(xs: &[T], what: &str) -> Result<()> {
    if xs.is_empty() {
        Err(Error::Config(format!("{what}: empty input")))
    } else {
        Ok(())
    }
}

pub fn precision_at_1(instances: &[ScoredInstance]) -> Result<f64> {
    nonempty(instances, "precision_at_1")?;
    let hits = instances
        .iter()
        .filter(|i| rank_of_positive(i) == 1)
        .count();
    Ok(hits as f64 / instances.len() as f64)
}

pub fn mrr(instances: &[ScoredInstance]) -> Result<f64> {
    nonempty(instances, "mrr")?;
    let sum: f64 = instances
        .iter()
        .map(|i| 1.0 / rank_of_positive(i) as f64)
        .sum();
    Ok(sum / instances.len() as f64)
}

/// Probability that a positive outscores a negative, ties worth one half.
///
/// Computed from the rank sum of the positives under mid-ranks, which gives
/// tied pairs exactly half credit.
pub fn auc_roc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    nonempty(pos, "auc_roc positives")?;
    nonempty(neg, "auc_roc negatives")?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // twice the rank sum keeps mid-ranks integral
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1, mid-rank (i + j + 2) / 2
        let twice_mid = (i + j + 2) as u128;
        let n_pos = all[i..=j].iter().filter(|x| x.1).count() as u128;
        twice_rank_sum += twice_mid * n_pos;
        i = j + 1;
    }
    let p = pos.len() as u128;
    let n = neg.len() as u128;
    // U = R - P(P+1)/2, both doubled
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * n) as f64)
}

/// Mean over instances of (positive − mean of negatives).
pub fn score_gap(instances: &[ScoredInstance]) -> Result<f64> {
    nonempty(instances, "score_gap")?;
    let sum: f64 = instances
        .iter()
        .map(|i| {
            let mean = i.negative_scores.iter().sum::<f64>() / i.negative_scores.len() as f64;
            i.positive_score - mean
        })
        .sum();
    Ok(sum / instances.len() as f64)
}

/// All four intrinsic metrics over a set of instances, AUC pooled.
pub fn intrinsic_metrics(instances: &[ScoredInstance]) -> Result<IntrinsicMetrics> {
    let pos: Vec<f64> = instances.iter().map(|i| i.positive_score).collect();
    let neg: Vec<f64> = instances
        .iter()
        .flat_map(|i| i.negative_scores.iter().copied())
        .collect();
    Ok(IntrinsicMetrics {
        n: instances.len(),
        p_at_1: precision_at_1(instances)?,
        mrr: mrr(instances)?,
        auc_roc: auc_roc(&pos, &neg)?,
        score_gap: score_gap(instances)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub surface: String,
    pub score: f64,
}

/// One teacher-forced step of the filter study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: String,
    pub step: usize,
    pub gold_surface: String,
    pub candidates: Vec<ScoredCandidate>,
    pub gold_index: Option<usize>,
    pub excluded: bool,
}

impl StepRecord {
    pub fn new(
        episode: String,
        step: usize,
        gold_surface: String,
        candidates: Vec<ScoredCandidate>,
        gold_index: Option<usize>,
    ) -> Self {
        StepRecord {
            episode,
            step,
            gold_surface,
            candidates,
            excluded: gold_index.is_none(),
            gold_index,
        }
    }

    /// Pessimistic rank of the gold candidate.
    pub fn gold_rank(&self) -> Option<usize> {
        let g = self.gold_index?;
        let gs = self.candidates[g].score;
        let above = self
            .candidates
            .iter()
            .enumerate()
            .filter(|&(i, c)| i != g && c.score >= gs)
            .count();
        Some(1 + above)
    }

    /// Gold score minus the best non-gold score; `None` when excluded or alone.
    pub fn margin(&self) -> Option<f64> {
        let g = self.gold_index?;
        let best = self
            .candidates
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != g)
            .map(|(_, c)| c.score)
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))))?;
        Some(self.candidates[g].score - best)
    }
}

/// Fraction of non-excluded records whose gold ranks within the top `k`.
/// `None` when every record is excluded.
pub fn garr_at_k(records: &[StepRecord], k: usize) -> Result<Option<f64>> {
    nonempty(records, "garr_at_k")?;
    let ranks: Vec<usize> = records.iter().filter_map(StepRecord::gold_rank).collect();
    if ranks.is_empty() {
        return Ok(None);
    }
    let kept = ranks.iter().filter(|&&r| r <= k).count();
    Ok(Some(kept as f64 / ranks.len() as f64))
}

pub fn safety_margin(records: &[StepRecord]) -> Result<Option<f64>> {
    nonempty(records, "safety_margin")?;
    let margins: Vec<f64> = records.iter().filter_map(StepRecord::margin).collect();
    if margins.is_empty() {
        return Ok(None);
    }
    Ok(Some(margins.iter().sum::<f64>() / margins.len() as f64))
}

pub fn exclusion_rate(records: &[StepRecord]) -> Result<f64> {
    nonempty(records, "exclusion_rate")?;
    let excluded = records.iter().filter(|r| r.excluded).count();
    Ok(excluded as f64 / records.len() as f64)
}

pub const DEFAULT_KS: [usize; 4] = [1, 5, 10, 20];

pub fn filter_metrics(records: &[StepRecord], ks: &[usize]) -> Result<FilterMetrics> {
    let mut garr = Vec::with_capacity(ks.len());
    for &k in ks {
        garr.push((k, garr_at_k(records, k)?));
    }
    Ok(FilterMetrics {
        steps: records.len(),
        excluded: records.iter().filter(|r| r.excluded).count(),
        exclusion_rate: exclusion_rate(records)?,
        garr,
        safety_margin: safety_margin(records)?,
    })
}
