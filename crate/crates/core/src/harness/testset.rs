//! Held-out intrinsic test set: one state per instance, one negative type per category.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::microworld::{
    classify, enumerate_candidates, init_episode, render_state, Episode, Family, FeedbackClass,
};
use crate::negmine::{antonym_table, cross_task_pool, mine_minimal_edit, EpisodeRef};
use crate::rng;
use crate::training::HELDOUT_FROM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    RejectionOnly,
    CrossTask,
    MinimalEdit,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::RejectionOnly,
        Category::CrossTask,
        Category::MinimalEdit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::RejectionOnly => "rejection-only",
            Category::CrossTask => "cross-task",
            Category::MinimalEdit => "minimal-edit",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown category {s:?}")))
    }
}

/// One line of the test-set JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicInstance {
    pub schema_version: u32,
    pub category: Category,
    pub state_prompt: String,
    pub positive: String,
    pub negatives: Vec<String>,
    pub episode_ref: EpisodeRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestSetConfig {
    pub rejection_only: usize,
    pub cross_task: usize,
    pub minimal_edit: usize,
    /// Cap on negatives attached to one instance.
    pub max_negatives: usize,
}

impl Default for TestSetConfig {
    fn default() -> Self {
        TestSetConfig {
            rejection_only: 225,
            cross_task: 306,
            minimal_edit: 74,
            max_negatives: 8,
        }
    }
}

impl TestSetConfig {
    pub fn target(&self, c: Category) -> usize {
        match c {
            Category::RejectionOnly => self.rejection_only,
            Category::CrossTask => self.cross_task,
            Category::MinimalEdit => self.minimal_edit,
        }
    }

    pub fn total(&self) -> usize {
        Category::ALL.iter().map(|&c| self.target(c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntrinsicTestSet {
    pub instances: Vec<IntrinsicInstance>,
}

impl IntrinsicTestSet {
    pub fn of(&self, c: Category) -> impl Iterator<Item = &IntrinsicInstance> {
        self.instances.iter().filter(move |i| i.category == c)
    }

    pub fn counts(&self) -> BTreeMap<Category, usize> {
        let mut m = BTreeMap::new();
        for i in &self.instances {
            *m.entry(i.category).or_default() += 1;
        }
        m
    }
}

/// All qualifying negatives of each category at every gold step.
struct StepPools {
    episode_ref: EpisodeRef,
    state_prompt: String,
    positive: String,
    pools: BTreeMap<Category, Vec<String>>,
}

fn step_pools(episodes: &[Episode]) -> Result<Vec<StepPools>> {
    let mut cross: BTreeMap<Family, _> = BTreeMap::new();
    let mut out = Vec::new();
    for ep in episodes {
        if ep.variation < HELDOUT_FROM {
            return Err(Error::Config(format!(
                "{} v{} is a training variation; the test set draws only from held-out variations",
                ep.family, ep.variation
            )));
        }
        let pool = cross
            .entry(ep.family)
            .or_insert_with(|| cross_task_pool(episodes, ep.family));
        let states = ep.replay()?;
        for (step, (state, gold)) in states.iter().zip(&ep.gold_trajectory).enumerate() {
            let cands = enumerate_candidates(state);
            let mut pools = BTreeMap::new();
            pools.insert(
                Category::RejectionOnly,
                cands
                    .of_class(FeedbackClass::Rejected)
                    .map(|c| c.action.surface.clone())
                    .collect::<Vec<_>>(),
            );
            pools.insert(
                Category::CrossTask,
                pool.iter()
                    .filter(|p| p.action.surface != gold.surface)
                    .filter(|p| classify(state, &p.action) != FeedbackClass::Effective)
                    .map(|p| p.action.surface.clone())
                    .collect(),
            );
            pools.insert(
                Category::MinimalEdit,
                mine_minimal_edit(gold, state, antonym_table())
                    .into_iter()
                    .map(|n| n.surface)
                    .collect(),
            );
            out.push(StepPools {
                episode_ref: EpisodeRef {
                    family: ep.family,
                    variation: ep.variation,
                    seed: ep.seed,
                    step,
                },
                state_prompt: render_state(state),
                positive: gold.surface.clone(),
                pools,
            });
        }
    }
    Ok(out)
}

/// Sample one state per instance from held-out gold trajectories.
///
/// Scarcer categories pick first (minimal-edit, cross-task, rejection-only)
/// and a state used by one category is unavailable to the others. A category
/// that falls short of its target keeps what it got, unless that is under
/// half the target, which is an error.
pub fn build_intrinsic_testset(
    heldout: &[Episode],
    config: &TestSetConfig,
    seed: u64,
) -> Result<IntrinsicTestSet> {
    if config.max_negatives == 0 {
        return Err(Error::Config("max_negatives must be positive".into()));
    }
    let steps = step_pools(heldout)?;
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut instances = Vec::new();
    for cat in [
        Category::MinimalEdit,
        Category::CrossTask,
        Category::RejectionOnly,
    ] {
        let target = config.target(cat);
        let mut order: Vec<usize> = (0..steps.len())
            .filter(|&i| !steps[i].pools[&cat].is_empty())
            .collect();
        let eligible = order.len();
        order.shuffle(&mut rng::stream(seed, &format!("testset/{cat}")));
        let mut got = 0;
        for i in order {
            if got == target {
                break;
            }
            if !used.insert(i) {
                continue;
            }
            let s = &steps[i];
            let mut negatives = s.pools[&cat].clone();
            let key = format!("testset/{cat}/{}", s.episode_ref);
            negatives.shuffle(&mut rng::stream(seed, &key));
            negatives.truncate(config.max_negatives);
            instances.push(IntrinsicInstance {
                schema_version: crate::SCHEMA_VERSION,
                category: cat,
                state_prompt: s.state_prompt.clone(),
                positive: s.positive.clone(),
                negatives,
                episode_ref: s.episode_ref.clone(),
            });
            got += 1;
        }
        if got < target {
            let msg = format!(
                "{cat}: {got} of {target} instances ({eligible} eligible states in {} steps)",
                steps.len()
            );
            if got * 2 < target {
                return Err(Error::Generation(format!(
                    "{msg}; regenerate with more held-out episodes"
                )));
            }
            log::warn!("{msg}");
        }
    }
    instances.sort_by(|a, b| (a.category, &a.episode_ref).cmp(&(b.category, &b.episode_ref)));
    Ok(IntrinsicTestSet { instances })
}

/// Held-out episodes of every family, one batch per seed.
pub fn heldout_episodes(families: &[Family], seeds: std::ops::Range<u64>) -> Result<Vec<Episode>> {
    let mut out = Vec::new();
    for seed in seeds {
        for &f in families {
            for v in HELDOUT_FROM..=crate::microworld::episode::MAX_VARIATION {
                out.push(init_episode(f, v, seed)?);
            }
        }
    }
    Ok(out)
}
