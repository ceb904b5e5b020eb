//! Deterministic English rendering of the agent's view of a state.

use super::rules::{rules, Phase};
use super::state::{Kind, Location, WorldObject, WorldState};

pub const GROWTH_STAGES: [&str; 5] = ["seed", "sprout", "seedling", "adult", "flowering"];

/// Words produced by the templates below (numbers excluded).
pub const TEMPLATE_WORDS: &[&str] = &[
    "you",
    "are",
    "in",
    "the",
    "see",
    "a",
    "an",
    "nothing",
    "containing",
    "and",
    "empty",
    "your",
    "inventory",
    "is",
    "carry",
    "notes",
    "at",
    "c",
    "solid",
    "gas",
    "on",
    "off",
    "open",
    "closed",
    "doors",
    "lead",
    "to",
];

pub fn render_state(state: &WorldState) -> String {
    let mut out = format!("you are in the {}.", state.agent_room);
    let exits = exits(&state.agent_room);
    if !exits.is_empty() {
        out.push_str(&format!(" doors lead to: {}.", exits.join(", ")));
    }

    let mut top: Vec<&WorldObject> = state
        .objects
        .values()
        .filter(|o| o.location == Location::Room(state.agent_room.clone()))
        .collect();
    top.sort_by_key(|o| (render_group(o), o.id.as_str()));

    if top.is_empty() {
        out.push_str(" you see: nothing.");
    } else {
        out.push_str(" you see:");
        for o in top {
            out.push(' ');
            out.push_str(&describe(state, o));
            out.push('.');
        }
    }

    let held: Vec<String> = state
        .inventory()
        .into_iter()
        .map(|id| describe(state, &state.objects[id]))
        .collect();
    if held.is_empty() {
        out.push_str(" your inventory is empty.");
    } else {
        out.push_str(&format!(" you carry: {}.", held.join(", ")));
    }

    if !state.readings.is_empty() {
        let notes: Vec<String> = state
            .readings
            .iter()
            .map(|r| format!("{} at {} c", r.object, r.temperature))
            .collect();
        out.push_str(&format!(" your notes: {}.", notes.join(", ")));
    }
    out
}

/// Rooms one door away, alphabetical.
pub fn exits(room: &str) -> Vec<&'static str> {
    let mut out: Vec<&str> = rules()
        .doors
        .iter()
        .filter_map(|[a, b]| {
            if a == room {
                Some(b.as_str())
            } else if b == room {
                Some(a.as_str())
            } else {
                None
            }
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Fixtures and fixed furniture first, then portable containers, then loose items.
fn render_group(o: &WorldObject) -> u8 {
    match o.kind {
        Kind::Fixture | Kind::Device => 0,
        Kind::Container if !o.portable => 0,
        Kind::Container => 1,
        _ => 2,
    }
}

fn article(word: &str) -> &'static str {
    match word.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn describe(state: &WorldState, o: &WorldObject) -> String {
    if o.kind == Kind::SubstancePortion {
        return match o.phase {
            Some(Phase::Solid) => format!("{} (solid, {} c)", o.id, o.temperature),
            Some(Phase::Gas) => format!("{} (gas, {} c)", o.id, o.temperature),
            _ => format!("{} ({} c)", o.id, o.temperature),
        };
    }

    let mut status: Vec<&str> = Vec::new();
    if o.kind == Kind::Device {
        status.push(if o.active { "on" } else { "off" });
    }
    if o.openable {
        status.push(if o.open { "open" } else { "closed" });
    }
    if let Some(stage) = o.growth {
        status.push(GROWTH_STAGES[usize::from(stage).min(GROWTH_STAGES.len() - 1)]);
    }
    let contents: Vec<String> = if o.is_accessible_inside() {
        state
            .children(&o.id)
            .into_iter()
            .map(|c| describe(state, c))
            .collect()
    } else {
        Vec::new()
    };
    if o.kind == Kind::Container && o.is_accessible_inside() && contents.is_empty() {
        status.push("empty");
    }

    let mut text = format!("{} {}", article(&o.id), o.id);
    if !status.is_empty() {
        text.push_str(&format!(" ({})", status.join(", ")));
    }
    if !contents.is_empty() {
        text.push_str(" containing ");
        text.push_str(&contents.join(" and "));
    }
    text
}
