//! Typed hard-negative mining and contrastive instance assembly.
//!
//! Negative types, from easiest to hardest:
//! 1. silent: parses and is attemptable but does nothing here
//! 2. rejected: the environment refuses it
//! 3. cross-task: a gold action from another task family that is not effective here
//! 4. minimal edit: a valid action with one physics-critical word swapped for its antonym

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::microworld::{
    classify, enumerate_candidates, render_state, Action, CandidateSet, Episode, Family,
    FeedbackClass, WorldState,
};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NegType {
    #[serde(rename = "type1_silent")]
    Silent,
    #[serde(rename = "type2_rejected")]
    Rejected,
    #[serde(rename = "type3_crosstask")]
    CrossTask,
    #[serde(rename = "type4_minimal_edit")]
    MinimalEdit,
}

impl NegType {
    pub const MINED: [NegType; 3] = [NegType::Silent, NegType::Rejected, NegType::CrossTask];

    pub fn name(self) -> &'static str {
        match self {
            NegType::Silent => "type1_silent",
            NegType::Rejected => "type2_rejected",
            NegType::CrossTask => "type3_crosstask",
            NegType::MinimalEdit => "type4_minimal_edit",
        }
    }
}

impl fmt::Display for NegType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeSample {
    pub surface: String,
    pub neg_type: NegType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_token_index: Option<usize>,
}

impl NegativeSample {
    fn plain(surface: &str, neg_type: NegType) -> Self {
        NegativeSample {
            surface: surface.to_string(),
            neg_type,
            source_family: None,
            edited_token_index: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EpisodeRef {
    pub family: Family,
    pub variation: u32,
    pub seed: u64,
    pub step: usize,
}

impl fmt::Display for EpisodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/v{}/s{}/step{}",
            self.family, self.variation, self.seed, self.step
        )
    }
}

/// One line of the instance JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub schema_version: u32,
    pub state_prompt: String,
    pub positive: String,
    pub negatives: Vec<NegativeSample>,
    pub episode_ref: EpisodeRef,
}

impl TrainingInstance {
    pub fn id(&self) -> String {
        self.episode_ref.to_string()
    }

    pub fn negative_surfaces(&self) -> impl Iterator<Item = &str> {
        self.negatives.iter().map(|n| n.surface.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeMix {
    pub type1: usize,
    pub type2: usize,
    pub type3: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    pub n_negatives: usize,
    pub type_mix: TypeMix,
    /// When set, minimal-edit negatives are appended after the mined ones.
    pub include_type4: bool,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            n_negatives: 16,
            type_mix: TypeMix {
                type1: 4,
                type2: 6,
                type3: 6,
            },
            include_type4: false,
        }
    }
}

impl MiningConfig {
    /// Scale the default 4/6/6 proportions to `n` negatives.
    pub fn with_n(n: usize) -> Self {
        let type1 = n / 4;
        let type2 = (n - type1) / 2;
        MiningConfig {
            n_negatives: n,
            type_mix: TypeMix {
                type1,
                type2,
                type3: n - type1 - type2,
            },
            include_type4: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.type_mix;
        if self.n_negatives == 0 {
            return Err(Error::Config("n_negatives must be positive".into()));
        }
        if m.type1 + m.type2 + m.type3 != self.n_negatives {
            return Err(Error::Config(format!(
                "type_mix {}+{}+{} does not sum to n_negatives {}",
                m.type1, m.type2, m.type3, self.n_negatives
            )));
        }
        Ok(())
    }

    fn quota(&self, t: NegType) -> usize {
        match t {
            NegType::Silent => self.type_mix.type1,
            NegType::Rejected => self.type_mix.type2,
            NegType::CrossTask => self.type_mix.type3,
            NegType::MinimalEdit => 0,
        }
    }
}

/// A gold action from some episode, tagged with its family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolAction {
    pub action: Action,
    pub family: Family,
}

/// Gold actions of every family except `exclude`, one entry per surface
/// (the first family in canonical order wins), sorted by surface.
pub fn cross_task_pool(episodes: &[Episode], exclude: Family) -> Vec<PoolAction> {
    let mut by_surface: BTreeMap<String, PoolAction> = BTreeMap::new();
    for ep in episodes.iter().filter(|e| e.family != exclude) {
        for a in &ep.gold_trajectory {
            let entry = by_surface.entry(a.surface.clone()).or_insert(PoolAction {
                action: a.clone(),
                family: ep.family,
            });
            if ep.family < entry.family {
                entry.family = ep.family;
            }
        }
    }
    by_surface.into_values().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mined {
    pub negatives: Vec<NegativeSample>,
    /// Negatives that came from a later type than their quota slot.
    pub backfilled: usize,
}

/// Sample `config.n_negatives` distinct negatives following the type mix.
///
/// A shortfall in one type moves to the next (1 → 2 → 3); a remaining
/// shortfall after type 3 is taken from leftovers of types 1 and 2. If the
/// pools cannot supply enough distinct surfaces the reason is returned as
/// `Err` and the caller skips the state.
pub fn mine_env_negatives(
    state: &WorldState,
    positive: &str,
    candidates: &CandidateSet,
    pool: &[PoolAction],
    config: &MiningConfig,
    seed: u64,
) -> std::result::Result<Mined, String> {
    let mut rng = rng::stream(seed, "negatives");
    let mut pools: Vec<Vec<NegativeSample>> = Vec::with_capacity(3);
    for t in [NegType::Silent, NegType::Rejected] {
        let class = if t == NegType::Silent {
            FeedbackClass::Silent
        } else {
            FeedbackClass::Rejected
        };
        let mut p: Vec<NegativeSample> = candidates
            .of_class(class)
            .map(|c| NegativeSample::plain(&c.action.surface, t))
            .collect();
        p.shuffle(&mut rng);
        pools.push(p);
    }
    let mut cross: Vec<NegativeSample> = pool
        .iter()
        .filter(|p| classify(state, &p.action) != FeedbackClass::Effective)
        .map(|p| NegativeSample {
            source_family: Some(p.family),
            ..NegativeSample::plain(&p.action.surface, NegType::CrossTask)
        })
        .collect();
    cross.shuffle(&mut rng);
    pools.push(cross);

    let mut taken: BTreeSet<String> = BTreeSet::new();
    taken.insert(positive.to_string());
    let mut cursors = [0usize; 3];
    let mut out = Vec::with_capacity(config.n_negatives);
    let mut draw = |i: usize, want: usize, out: &mut Vec<NegativeSample>| -> usize {
        let mut got = 0;
        while got < want && cursors[i] < pools[i].len() {
            let cand = &pools[i][cursors[i]];
            cursors[i] += 1;
            if taken.insert(cand.surface.clone()) {
                out.push(cand.clone());
                got += 1;
            }
        }
        got
    };

    let mut carry = 0;
    let mut backfilled = 0;
    for (i, t) in NegType::MINED.into_iter().enumerate() {
        let quota = config.quota(t);
        let got = draw(i, quota + carry, &mut out);
        backfilled += got.saturating_sub(quota);
        carry = (quota + carry).saturating_sub(got);
    }
    for i in 0..2 {
        if carry == 0 {
            break;
        }
        let got = draw(i, carry, &mut out);
        backfilled += got;
        carry -= got;
    }
    if carry > 0 {
        let avail: Vec<usize> = pools.iter().map(Vec::len).collect();
        return Err(format!(
            "only {} distinct negatives available (silent {}, rejected {}, cross-task {}), need {}",
            out.len(),
            avail[0],
            avail[1],
            avail[2],
            config.n_negatives
        ));
    }
    Ok(Mined {
        negatives: out,
        backfilled,
    })
}

#[derive(Debug, Deserialize)]
struct AntonymFile {
    pairs: Vec<(String, String)>,
}

/// Symmetric word → antonym map shipped with the crate.
pub fn antonym_table() -> &'static BTreeMap<String, String> {
    static TABLE: OnceLock<BTreeMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let file: AntonymFile = serde_json::from_str(include_str!("../data/antonyms.json"))
            .expect("bundled antonyms.json is valid");
        let mut map = BTreeMap::new();
        for (a, b) in file.pairs {
            map.insert(a.clone(), b.clone());
            map.insert(b, a);
        }
        map
    })
}

/// Single-word antonym substitutions of `positive` that still parse but are
/// not effective at `state`.
pub fn mine_minimal_edit(
    positive: &Action,
    state: &WorldState,
    antonyms: &BTreeMap<String, String>,
) -> Vec<NegativeSample> {
    let tokens = positive.tokens();
    let mut out = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        let Some(swap) = antonyms.get(*tok) else {
            continue;
        };
        let mut edited: Vec<&str> = tokens.clone();
        edited[i] = swap;
        let Some(action) = Action::parse(&edited.join(" ")) else {
            continue;
        };
        if action.surface == positive.surface
            || classify(state, &action) == FeedbackClass::Effective
        {
            continue;
        }
        out.push(NegativeSample {
            edited_token_index: Some(i),
            ..NegativeSample::plain(&action.surface, NegType::MinimalEdit)
        });
    }
    out
}

/// Number of positions at which two whitespace token sequences differ, or
/// `None` when their lengths differ.
pub fn token_substitutions(a: &str, b: &str) -> Option<usize> {
    let ta: Vec<&str> = a.split_whitespace().collect();
    let tb: Vec<&str> = b.split_whitespace().collect();
    (ta.len() == tb.len()).then(|| ta.iter().zip(&tb).filter(|(x, y)| x != y).count())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningStats {
    pub steps: usize,
    pub instances: usize,
    pub skipped: usize,
    pub backfilled_negatives: usize,
    pub per_type: BTreeMap<NegType, usize>,
    pub skip_reasons: Vec<String>,
}

impl MiningStats {
    pub fn skip_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.skipped as f64 / self.steps as f64
        }
    }
}

/// Seed for one step's sampler, stable under reordering of episodes.
fn step_seed(seed: u64, r: &EpisodeRef) -> u64 {
    rng::derive_seed(seed, &format!("mine/{r}"))
}

/// One instance per gold step of every episode, negatives drawn from the
/// candidates at that step and from other families' gold actions.
pub fn assemble_dataset(
    episodes: &[Episode],
    config: &MiningConfig,
    seed: u64,
) -> Result<(Vec<TrainingInstance>, MiningStats)> {
    config.validate()?;
    if episodes.is_empty() {
        return Err(Error::Mining("no episodes to mine".into()));
    }
    let mut pools: BTreeMap<Family, Vec<PoolAction>> = BTreeMap::new();
    for ep in episodes {
        pools
            .entry(ep.family)
            .or_insert_with(|| cross_task_pool(episodes, ep.family));
    }

    let mut stats = MiningStats::default();
    let mut instances = Vec::new();
    for ep in episodes {
        let states = ep.replay()?;
        for (step, (state, gold)) in states.iter().zip(&ep.gold_trajectory).enumerate() {
            stats.steps += 1;
            let episode_ref = EpisodeRef {
                family: ep.family,
                variation: ep.variation,
                seed: ep.seed,
                step,
            };
            let candidates = enumerate_candidates(state);
            let mined = mine_env_negatives(
                state,
                &gold.surface,
                &candidates,
                &pools[&ep.family],
                config,
                step_seed(seed, &episode_ref),
            );
            let mut mined = match mined {
                Ok(m) => m,
                Err(reason) => {
                    log::warn!("skipping {episode_ref}: {reason}");
                    stats.skipped += 1;
                    stats.skip_reasons.push(format!("{episode_ref}: {reason}"));
                    continue;
                }
            };
            if config.include_type4 {
                for neg in mine_minimal_edit(gold, state, antonym_table()) {
                    if mined.negatives.iter().all(|n| n.surface != neg.surface) {
                        mined.negatives.push(neg);
                    }
                }
            }
            stats.backfilled_negatives += mined.backfilled;
            for n in &mined.negatives {
                *stats.per_type.entry(n.neg_type).or_default() += 1;
            }
            instances.push(TrainingInstance {
                schema_version: crate::SCHEMA_VERSION,
                state_prompt: render_state(state),
                positive: gold.surface.clone(),
                negatives: mined.negatives,
                episode_ref,
            });
        }
    }
    stats.instances = instances.len();
    if stats.instances * 2 < stats.steps {
        return Err(Error::Mining(format!(
            "only {} of {} steps yielded instances",
            stats.instances, stats.steps
        )));
    }
    Ok((instances, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microworld::{init_episode, Location, Role, Verb, WorldObject};

    fn stove_kitchen() -> WorldState {
        let mut s = WorldState::new("kitchen");
        s.insert(WorldObject::device(
            "stove",
            "kitchen",
            Role::Heater,
            false,
            true,
        ));
        s.insert(WorldObject::vessel("pot", Location::In("stove".into())));
        s.insert(WorldObject::portion(
            "water",
            Location::In("pot".into()),
            20,
        ));
        s
    }

    #[test]
    fn heat_becomes_cool() {
        let s = stove_kitchen();
        let heat = Action::unary(Verb::Heat, "water");
        assert_eq!(classify(&s, &heat), FeedbackClass::Effective);
        let negs = mine_minimal_edit(&heat, &s, antonym_table());
        assert_eq!(negs.len(), 1);
        assert_eq!(negs[0].surface, "cool water");
        assert_eq!(negs[0].edited_token_index, Some(0));
        assert!(mine_minimal_edit(&Action::wait(), &s, antonym_table()).is_empty());
    }

    #[test]
    fn default_mix_and_backfill() {
        let s = stove_kitchen();
        let cands = enumerate_candidates(&s);
        let n_silent = cands.of_class(FeedbackClass::Silent).count();
        let n_rejected = cands.of_class(FeedbackClass::Rejected).count();
        let pool: Vec<PoolAction> = ["take cup", "open drawer", "water plant", "go to garden"]
            .iter()
            .chain(["mix bowl", "measure salt", "eat apple", "drop book"].iter())
            .map(|t| PoolAction {
                action: Action::parse(t).unwrap(),
                family: Family::GrowPlant,
            })
            .collect();

        let cfg = MiningConfig::default();
        let m = mine_env_negatives(&s, "heat water", &cands, &pool, &cfg, 3).unwrap();
        let count = |m: &Mined, t| m.negatives.iter().filter(|n| n.neg_type == t).count();
        assert_eq!(m.negatives.len(), 16);
        assert_eq!(count(&m, NegType::Silent), 4);
        assert_eq!(count(&m, NegType::Rejected), 6);
        assert_eq!(count(&m, NegType::CrossTask), 6);
        assert_eq!(m.backfilled, 0);

        // silent quota larger than the silent pool: the deficit moves to rejected
        let cfg = MiningConfig {
            n_negatives: n_silent + 2 + 6 + 6,
            type_mix: TypeMix {
                type1: n_silent + 2,
                type2: 6,
                type3: 6,
            },
            include_type4: false,
        };
        assert!(n_rejected >= 8);
        let m = mine_env_negatives(&s, "heat water", &cands, &pool, &cfg, 3).unwrap();
        assert_eq!(count(&m, NegType::Silent), n_silent);
        assert_eq!(count(&m, NegType::Rejected), 8);
        assert_eq!(count(&m, NegType::CrossTask), 6);
        assert_eq!(m.backfilled, 2);
        let again = mine_env_negatives(&s, "heat water", &cands, &pool, &cfg, 3).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn effective_cross_task_actions_are_excluded() {
        let s = stove_kitchen();
        let pool = vec![
            PoolAction {
                action: Action::unary(Verb::Deactivate, "stove"),
                family: Family::Boil,
            },
            PoolAction {
                action: Action::unary(Verb::Take, "lamp"),
                family: Family::Boil,
            },
        ];
        let cfg = MiningConfig {
            n_negatives: 1,
            type_mix: TypeMix {
                type1: 0,
                type2: 0,
                type3: 1,
            },
            include_type4: false,
        };
        let m = mine_env_negatives(&s, "heat water", &enumerate_candidates(&s), &pool, &cfg, 0)
            .unwrap();
        assert_eq!(m.negatives[0].surface, "take lamp");
    }

    #[test]
    fn shortfall_skips_instead_of_padding() {
        let s = WorldState::new("hallway");
        let cands = enumerate_candidates(&s);
        let err = mine_env_negatives(
            &s,
            "go to kitchen",
            &cands,
            &[],
            &MiningConfig::default(),
            0,
        )
        .unwrap_err();
        assert!(err.contains("need 16"), "{err}");
    }

    #[test]
    fn config_validation() {
        assert!(MiningConfig::default().validate().is_ok());
        assert!(MiningConfig::with_n(3).validate().is_ok());
        let mut bad = MiningConfig::default();
        bad.type_mix.type3 = 5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn assembled_instances_respect_invariants() {
        let eps: Vec<Episode> = [Family::Boil, Family::GrowPlant]
            .into_iter()
            .flat_map(|f| (0..2).map(move |v| init_episode(f, v, 0).unwrap()))
            .collect();
        let (insts, stats) = assemble_dataset(&eps, &MiningConfig::default(), 11).unwrap();
        assert_eq!(stats.instances + stats.skipped, stats.steps);
        for inst in &insts {
            assert_eq!(inst.negatives.len(), 16);
            let set: BTreeSet<&str> = inst.negative_surfaces().collect();
            assert_eq!(set.len(), 16);
            assert!(!set.contains(inst.positive.as_str()));
            for n in &inst.negatives {
                if n.neg_type == NegType::CrossTask {
                    assert_ne!(n.source_family, Some(inst.episode_ref.family));
                }
            }
        }
    }
}
