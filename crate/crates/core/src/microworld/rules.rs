//! The shipped rule table: substances, reactions, physics constants and room layout.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

const RULES_JSON: &str = include_str!("../../data/rules.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Solid,
    Liquid,
    Gas,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substance {
    pub name: String,
    pub melting_point: i32,
    pub boiling_point: i32,
    pub edible: bool,
}

impl Substance {
    pub fn phase_at(&self, temperature: i32) -> Phase {
        if temperature < self.melting_point {
            Phase::Solid
        } else if temperature >= self.boiling_point {
            Phase::Gas
        } else {
            Phase::Liquid
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Physics {
    pub heat_step: i32,
    pub heat_max: i32,
    pub cool_step: i32,
    pub cool_min: i32,
    pub max_growth: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reaction {
    pub inputs: [String; 2],
    pub product: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rules {
    pub version: u32,
    pub physics: Physics,
    pub substances: Vec<Substance>,
    pub reactions: Vec<Reaction>,
    pub rooms: Vec<String>,
    pub doors: Vec<[String; 2]>,
}

impl Rules {
    pub fn substance(&self, name: &str) -> Option<&Substance> {
        self.substances.iter().find(|s| s.name == name)
    }

    pub fn is_room(&self, name: &str) -> bool {
        self.rooms.iter().any(|r| r == name)
    }

    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        self.doors
            .iter()
            .any(|[x, y]| (x == a && y == b) || (x == b && y == a))
    }

    /// The reaction consuming exactly this pair of substances, in either order.
    pub fn reaction_for(&self, a: &str, b: &str) -> Option<&Reaction> {
        self.reactions.iter().find(|r| {
            (r.inputs[0] == a && r.inputs[1] == b) || (r.inputs[0] == b && r.inputs[1] == a)
        })
    }
}

/// The process-wide rule table parsed from the shipped data file.
pub fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| {
        let rules: Rules = serde_json::from_str(RULES_JSON).expect("shipped rules.json parses");
        for s in &rules.substances {
            assert!(
                s.melting_point < s.boiling_point,
                "bad substance {}",
                s.name
            );
        }
        rules
    })
}
