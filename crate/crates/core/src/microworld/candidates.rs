use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::action::{Action, Verb};
use super::physics::{classify, FeedbackClass};
use super::rules::rules;
use super::state::{Kind, Location, WorldState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub action: Action,
    pub class: FeedbackClass,
}

/// Every attemptable action at a state, pre-classified, sorted by surface.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.candidates
            .iter()
            .map(|c| c.action.surface.as_str())
            .collect()
    }

    pub fn of_class(&self, class: FeedbackClass) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter().filter(move |c| c.class == class)
    }

    pub fn find(&self, surface: &str) -> Option<&Candidate> {
        self.candidates
            .binary_search_by(|c| c.action.surface.as_str().cmp(surface))
            .ok()
            .map(|i| &self.candidates[i])
    }
}

/// Ground the grammar against what the agent can see.
///
/// Unary verbs range over every visible object; `go to` ranges over all rooms.
/// `put` takes an item carried directly and `pour` a carried substance, each
/// into anything visible.
pub fn enumerate_candidates(state: &WorldState) -> CandidateSet {
    let mut actions: BTreeMap<String, Action> = BTreeMap::new();
    let mut add = |a: Action| {
        actions.entry(a.surface.clone()).or_insert(a);
    };

    add(Action::wait());
    for room in &rules().rooms {
        add(Action::go(room));
    }
    let visible = state.visible_ids();
    for id in &visible {
        for verb in Verb::UNARY {
            add(Action::unary(verb, id));
        }
    }
    for x in visible.iter().filter(|id| state.is_held(id)) {
        let obj = &state.objects[*x];
        let verb = if obj.kind == Kind::SubstancePortion {
            Verb::Pour
        } else if obj.location == Location::Held {
            Verb::Put
        } else {
            continue;
        };
        for y in visible.iter().filter(|y| *y != x) {
            add(Action::binary(verb, x, y));
        }
    }

    let candidates = actions
        .into_values()
        .map(|action| {
            let class = classify(state, &action);
            Candidate { action, class }
        })
        .collect();
    CandidateSet { candidates }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microworld::physics::step;
    use crate::microworld::state::{Role, WorldObject};

    fn kitchen() -> WorldState {
        let mut s = WorldState::new("kitchen");
        s.insert(WorldObject::device(
            "stove",
            "kitchen",
            Role::Heater,
            false,
            false,
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
    fn kitchen_candidates_are_classified() {
        let c = enumerate_candidates(&kitchen());
        assert_eq!(
            c.find("activate stove").unwrap().class,
            FeedbackClass::Effective
        );
        assert_eq!(c.find("push stove").unwrap().class, FeedbackClass::Silent);
        assert_eq!(c.find("eat stove").unwrap().class, FeedbackClass::Rejected);
    }

    #[test]
    fn ordering_is_lexicographic_and_stable() {
        let s = kitchen();
        let a = enumerate_candidates(&s);
        let b = enumerate_candidates(&s);
        assert_eq!(a, b);
        let surfaces = a.surfaces();
        let mut sorted = surfaces.clone();
        sorted.sort();
        assert_eq!(surfaces, sorted);
    }

    #[test]
    fn classification_matches_step() {
        let s = kitchen();
        for c in enumerate_candidates(&s).candidates {
            assert_eq!(step(&s, &c.action).1.class, c.class, "{}", c.action);
        }
    }

    #[test]
    fn empty_room_still_has_wait_and_moves() {
        let s = WorldState::new("hallway");
        let c = enumerate_candidates(&s);
        assert_eq!(c.len(), 5);
        assert!(c.find("wait").is_some());
        assert!(c.find("go to kitchen").is_some());
    }
}
