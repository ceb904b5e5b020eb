//! The two studies: the held-out intrinsic stress test and the teacher-forced
//! filter rollout, each run against any of four systems.

pub mod testset;

use rand::distributions::{Distribution, Uniform};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::report::CategoryMetrics;
use crate::metrics::{
    filter_metrics, gold_match, intrinsic_metrics, FilterReport, IntrinsicReport, MatcherConfig,
    ScoredCandidate, ScoredInstance, StepRecord, DEFAULT_KS,
};
use crate::microworld::{
    enumerate_candidates, init_episode, render_state, step, Episode, Family, FeedbackClass,
};
use crate::rng;
use crate::scorer::{init_params, Provenance, ScorerParams, Vocabulary};
use crate::training::HELDOUT_FROM;

pub use testset::{
    build_intrinsic_testset, heldout_episodes, Category, IntrinsicInstance, IntrinsicTestSet,
    TestSetConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Cwm,
    Sft,
    Untrained,
    Random,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] = [
        SystemKind::Cwm,
        SystemKind::Sft,
        SystemKind::Untrained,
        SystemKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Cwm => "cwm",
            SystemKind::Sft => "sft",
            SystemKind::Untrained => "untrained",
            SystemKind::Random => "random",
        }
    }

    pub fn needs_checkpoint(self) -> bool {
        matches!(self, SystemKind::Cwm | SystemKind::Sft)
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown system {s:?}")))
    }
}

/// A resolved system: trained or untrained weights, or a seeded random scorer.
#[derive(Debug, Clone)]
pub enum SystemUnderTest {
    Scorer {
        kind: SystemKind,
        params: Box<ScorerParams>,
        provenance: Provenance,
    },
    Random {
        seed: u64,
    },
}

impl SystemUnderTest {
    /// Trained weights; the vocabulary must match the current world.
    pub fn trained(kind: SystemKind, params: ScorerParams, provenance: Provenance) -> Result<Self> {
        if !kind.needs_checkpoint() {
            return Err(Error::Config(format!("{kind} does not take a checkpoint")));
        }
        if params.vocab != Vocabulary::standard() {
            return Err(Error::Checkpoint(format!(
                "{kind} checkpoint vocabulary {} does not match the world vocabulary {}",
                params.vocab.digest(),
                Vocabulary::standard().digest()
            )));
        }
        if let Some(mode) = provenance.mode {
            if mode.name() != kind.name() {
                return Err(Error::Checkpoint(format!(
                    "checkpoint was trained in {mode} mode, not {kind}"
                )));
            }
        }
        Ok(SystemUnderTest::Scorer {
            kind,
            params: Box::new(params),
            provenance,
        })
    }

    /// Freshly initialised scorer with default dims.
    pub fn untrained(seed: u64) -> Result<Self> {
        let params = init_params(seed, Vocabulary::standard(), 64, 64)?;
        Ok(SystemUnderTest::Scorer {
            kind: SystemKind::Untrained,
            params: Box::new(params),
            provenance: Provenance {
                seed,
                ..Provenance::default()
            },
        })
    }

    pub fn random(seed: u64) -> Self {
        SystemUnderTest::Random { seed }
    }

    pub fn kind(&self) -> SystemKind {
        match self {
            SystemUnderTest::Scorer { kind, .. } => *kind,
            SystemUnderTest::Random { .. } => SystemKind::Random,
        }
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        match self {
            SystemUnderTest::Scorer { provenance, .. } => Some(provenance),
            SystemUnderTest::Random { .. } => None,
        }
    }

    /// Scores for `actions` at `state_prompt`. The random system draws from a
    /// stream keyed by `key`, so results do not depend on evaluation order.
    pub fn score<S: AsRef<str>>(&self, key: &str, state_prompt: &str, actions: &[S]) -> Vec<f64> {
        match self {
            SystemUnderTest::Scorer { params, .. } => params.score_many(state_prompt, actions),
            SystemUnderTest::Random { seed } => {
                let mut r = rng::stream(*seed, key);
                let dist = Uniform::new(0.0, 1.0);
                actions.iter().map(|_| dist.sample(&mut r)).collect()
            }
        }
    }
}

pub const COMBINED: &str = "combined";

pub fn score_intrinsic(system: &SystemUnderTest, inst: &IntrinsicInstance) -> ScoredInstance {
    let actions: Vec<&str> = std::iter::once(inst.positive.as_str())
        .chain(inst.negatives.iter().map(String::as_str))
        .collect();
    let key = format!("intrinsic/{}/{}", inst.category, inst.episode_ref);
    let mut scores = system.score(&key, &inst.state_prompt, &actions);
    let pos = scores.remove(0);
    ScoredInstance::new(pos, scores)
}

/// Per-category metrics in table order, then the pooled `combined` row.
pub fn eval_intrinsic(
    system: &SystemUnderTest,
    testset: &IntrinsicTestSet,
) -> Result<IntrinsicReport> {
    if testset.instances.is_empty() {
        return Err(Error::Config("empty intrinsic test set".into()));
    }
    let mut categories = Vec::new();
    let mut all = Vec::new();
    for cat in Category::ALL {
        let scored: Vec<ScoredInstance> = testset
            .of(cat)
            .map(|i| score_intrinsic(system, i))
            .collect();
        if scored.is_empty() {
            continue;
        }
        categories.push(CategoryMetrics {
            category: cat.name().to_string(),
            metrics: intrinsic_metrics(&scored)?,
        });
        all.extend(scored);
    }
    categories.push(CategoryMetrics {
        category: COMBINED.to_string(),
        metrics: intrinsic_metrics(&all)?,
    });
    Ok(IntrinsicReport {
        schema_version: crate::SCHEMA_VERSION,
        system: system.kind().name().to_string(),
        categories,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    InDomain,
    Ood,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::InDomain => "in-domain",
            Condition::Ood => "ood",
        }
    }

    pub fn families(self) -> [Family; 3] {
        match self {
            Condition::InDomain => Family::IN_DOMAIN,
            Condition::Ood => Family::OOD,
        }
    }

    /// Total rollout episodes: 15 in-domain, 30 per family out of domain.
    pub fn default_episodes(self) -> usize {
        match self {
            Condition::InDomain => 15,
            Condition::Ood => 90,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-domain" => Ok(Condition::InDomain),
            "ood" => Ok(Condition::Ood),
            _ => Err(Error::Config(format!("unknown condition {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub condition: Condition,
    pub episodes: usize,
    pub ks: Vec<usize>,
    pub seed: u64,
    pub matcher: MatcherConfig,
}

impl FilterConfig {
    pub fn new(condition: Condition, seed: u64) -> Self {
        FilterConfig {
            condition,
            episodes: condition.default_episodes(),
            ks: DEFAULT_KS.to_vec(),
            seed,
            matcher: MatcherConfig::default(),
        }
    }
}

/// Held-out rollout episodes for a condition: families in turn, cycling
/// through the held-out variations, then moving to the next seed.
pub fn filter_episodes(config: &FilterConfig) -> Result<Vec<Episode>> {
    let fams = config.condition.families();
    let n_var = (crate::microworld::episode::MAX_VARIATION + 1 - HELDOUT_FROM) as usize;
    (0..config.episodes)
        .map(|i| {
            let family = fams[i % fams.len()];
            let j = i / fams.len();
            let variation = HELDOUT_FROM + (j % n_var) as u32;
            let seed = rng::derive_seed(config.seed, "filter").wrapping_add((j / n_var) as u64);
            init_episode(family, variation, seed)
        })
        .collect()
}

/// Refuse an out-of-domain run with weights that saw out-of-domain families.
pub fn check_ood_provenance(system: &SystemUnderTest, condition: Condition) -> Result<()> {
    if condition != Condition::Ood {
        return Ok(());
    }
    if let Some(p) = system.provenance() {
        let leaked: Vec<String> = p
            .trained_families
            .iter()
            .filter(|f| f.is_ood())
            .map(|f| f.to_string())
            .collect();
        if !leaked.is_empty() {
            return Err(Error::Config(format!(
                "{} weights were trained on out-of-domain families: {}",
                system.kind(),
                leaked.join(", ")
            )));
        }
    }
    Ok(())
}

/// Teacher-forced rollout: rank every candidate at every gold step, then
/// execute the gold action whatever its rank.
pub fn run_filter_eval(
    system: &SystemUnderTest,
    episodes: &[Episode],
    config: &FilterConfig,
) -> Result<(FilterReport, Vec<StepRecord>)> {
    check_ood_provenance(system, config.condition)?;
    if episodes.is_empty() {
        return Err(Error::Config("no rollout episodes".into()));
    }
    let mut records = Vec::new();
    for ep in episodes {
        let id = format!("{}/v{}/s{}", ep.family, ep.variation, ep.seed);
        let mut state = ep.initial_state.clone();
        for (i, gold) in ep.gold_trajectory.iter().enumerate() {
            let cands = enumerate_candidates(&state);
            let surfaces = cands.surfaces();
            let scores = system.score(
                &format!("filter/{id}/{i}"),
                &render_state(&state),
                &surfaces,
            );
            let gold_index = gold_match(&gold.surface, &surfaces, &config.matcher);
            let candidates = surfaces
                .iter()
                .zip(scores)
                .map(|(s, score)| ScoredCandidate {
                    surface: s.to_string(),
                    score,
                })
                .collect();
            records.push(StepRecord::new(
                id.clone(),
                i,
                gold.surface.clone(),
                candidates,
                gold_index,
            ));

            let (next, fb) = step(&state, gold);
            if fb.class != FeedbackClass::Effective {
                return Err(Error::Generation(format!(
                    "{id} step {i}: gold action {:?} was {}",
                    gold.surface, fb.class
                )));
            }
            state = next;
        }
    }
    let metrics = filter_metrics(&records, &config.ks)?;
    let report = FilterReport {
        schema_version: crate::SCHEMA_VERSION,
        system: system.kind().name().to_string(),
        condition: config.condition.name().to_string(),
        families: config
            .condition
            .families()
            .iter()
            .map(|f| f.to_string())
            .collect(),
        episodes: episodes.len(),
        metrics,
    };
    Ok((report, records))
}
