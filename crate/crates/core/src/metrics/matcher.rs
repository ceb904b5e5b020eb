//! Locates an expert action among environment candidates despite small
//! differences in wording.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::microworld::action::ARTICLES;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatcherConfig {
    pub jaccard_min: f64,
    pub levenshtein_min: f64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            jaccard_min: 0.8,
            levenshtein_min: 0.85,
        }
    }
}

/// Lowercase, drop articles, collapse whitespace.
pub fn normalize(text: &str) -> String {
    text.to_lowercase()
        .split_whitespace()
        .filter(|t| !ARTICLES.contains(t))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let ta: BTreeSet<&str> = a.split_whitespace().collect();
    let tb: BTreeSet<&str> = b.split_whitespace().collect();
    let union = ta.union(&tb).count();
    if union == 0 {
        return 1.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

/// Index of the best candidate scoring at least `min`; earliest index wins ties.
fn best_above(scores: impl Iterator<Item = f64>, min: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.filter(|&(_, s)| s >= min).map(|(i, _)| i)
}

/// Exact match after normalisation, then token-set Jaccard, then normalised
/// Levenshtein similarity. `None` when nothing clears its threshold.
pub fn gold_match<S: AsRef<str>>(
    gold: &str,
    candidates: &[S],
    cfg: &MatcherConfig,
) -> Option<usize> {
    let g = normalize(gold);
    let cands: Vec<String> = candidates.iter().map(|c| normalize(c.as_ref())).collect();
    if let Some(i) = cands.iter().position(|c| *c == g) {
        return Some(i);
    }
    best_above(cands.iter().map(|c| token_jaccard(&g, c)), cfg.jaccard_min).or_else(|| {
        best_above(
            cands.iter().map(|c| strsim::normalized_levenshtein(&g, c)),
            cfg.levenshtein_min,
        )
    })
}
