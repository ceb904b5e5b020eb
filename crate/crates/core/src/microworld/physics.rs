//! Transition rules: one action applied to one state.

use serde::{Deserialize, Serialize};
use std::fmt;

use super::action::{Action, Verb};
use super::rules::{rules, Phase};
use super::state::{Kind, Location, Reading, Role, WorldObject, WorldState};

pub const SILENT_MESSAGE: &str = "Nothing happens.";
pub const PARSE_ERROR_MESSAGE: &str = "I don't understand that.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackClass {
    Effective,
    Silent,
    Rejected,
    ParseError,
}

impl fmt::Display for FeedbackClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackClass::Effective => "effective",
            FeedbackClass::Silent => "silent",
            FeedbackClass::Rejected => "rejected",
            FeedbackClass::ParseError => "parse_error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub class: FeedbackClass,
    pub message: String,
}

impl Feedback {
    fn silent() -> Self {
        Feedback {
            class: FeedbackClass::Silent,
            message: SILENT_MESSAGE.to_string(),
        }
    }

    fn rejected(message: String) -> Self {
        debug_assert!(message.starts_with("You can't"));
        Feedback {
            class: FeedbackClass::Rejected,
            message,
        }
    }
}

enum Outcome {
    Changed(WorldState, String),
    Silent,
    Rejected(String),
}

use Outcome::{Changed, Rejected, Silent};

/// Apply `action` to `state`. Non-effective actions return an unchanged copy.
pub fn step(state: &WorldState, action: &Action) -> (WorldState, Feedback) {
    match apply(state, action) {
        Changed(mut next, message) => {
            next.tick += 1;
            passive_tick(&mut next);
            next.refresh_phases();
            (
                next,
                Feedback {
                    class: FeedbackClass::Effective,
                    message,
                },
            )
        }
        Silent => (state.clone(), Feedback::silent()),
        Rejected(msg) => (state.clone(), Feedback::rejected(msg)),
    }
}

/// Parse then step; text outside the grammar yields a `parse_error` feedback.
pub fn step_text(state: &WorldState, text: &str) -> (WorldState, Feedback) {
    match Action::parse(text) {
        Some(action) => step(state, &action),
        None => (
            state.clone(),
            Feedback {
                class: FeedbackClass::ParseError,
                message: PARSE_ERROR_MESSAGE.to_string(),
            },
        ),
    }
}

/// Dry-run classification without keeping the successor.
pub fn classify(state: &WorldState, action: &Action) -> FeedbackClass {
    match apply(state, action) {
        Changed(..) => FeedbackClass::Effective,
        Silent => FeedbackClass::Silent,
        Rejected(_) => FeedbackClass::Rejected,
    }
}

fn apply(state: &WorldState, action: &Action) -> Outcome {
    let verb = action.verb;
    match (verb, action.args.as_slice()) {
        (Verb::Wait, _) => Changed(state.clone(), "Time passes.".into()),
        (Verb::Go, [room]) => go(state, room),
        (Verb::Put | Verb::Pour, [x, y]) => {
            let (Some(obj), Some(target)) = (visible(state, x), visible(state, y)) else {
                let missing = if visible(state, x).is_none() { x } else { y };
                return Rejected(format!("You can't see the {missing} here."));
            };
            if verb == Verb::Put {
                put(state, obj, target)
            } else {
                pour(state, obj, target)
            }
        }
        (_, [x]) => match visible(state, x) {
            None => Rejected(format!("You can't see the {x} here.")),
            Some(obj) => unary(state, verb, obj),
        },
        _ => Rejected("You can't do that.".into()),
    }
}

fn visible<'a>(state: &'a WorldState, id: &str) -> Option<&'a WorldObject> {
    state.get(id).filter(|_| state.is_visible(id))
}

fn go(state: &WorldState, room: &str) -> Outcome {
    let table = rules();
    if !table.is_room(room) {
        return Rejected(format!("You can't go to the {room}."));
    }
    if room == state.agent_room {
        return Silent;
    }
    if !table.adjacent(&state.agent_room, room) {
        return Rejected(format!("You can't go to the {room} from here."));
    }
    let mut next = state.clone();
    next.agent_room = room.to_string();
    Changed(next, format!("You go to the {room}."))
}

fn put(state: &WorldState, obj: &WorldObject, target: &WorldObject) -> Outcome {
    let (x, y) = (obj.id.as_str(), target.id.as_str());
    if obj.location != Location::Held {
        return Rejected(format!(
            "You can't put the {x} anywhere, you are not holding it."
        ));
    }
    if x == y || !target.is_receptacle() {
        return Rejected(format!("You can't put the {x} in the {y}."));
    }
    if target.openable && !target.open {
        return Rejected(format!("You can't put the {x} in the {y}, it is closed."));
    }
    if state.ancestors(y).contains(&x) {
        return Rejected(format!("You can't put the {x} inside itself."));
    }
    let mut next = state.clone();
    next.objects.get_mut(x).unwrap().location = Location::In(y.to_string());
    Changed(next, format!("You put the {x} in the {y}."))
}

fn pour(state: &WorldState, obj: &WorldObject, target: &WorldObject) -> Outcome {
    let (x, y) = (obj.id.as_str(), target.id.as_str());
    if obj.kind != Kind::SubstancePortion {
        return Rejected(format!("You can't pour the {x}."));
    }
    if !state.is_held(x) {
        return Rejected(format!("You can't pour the {x}, you are not holding it."));
    }
    if obj.phase == Some(Phase::Gas) {
        return Rejected(format!("You can't pour the {x}, it is a gas."));
    }
    if target.kind != Kind::Container || !target.portable {
        return Rejected(format!("You can't pour the {x} in the {y}."));
    }
    if obj.location == Location::In(y.to_string()) {
        return Silent;
    }
    let mut next = state.clone();
    next.objects.get_mut(x).unwrap().location = Location::In(y.to_string());
    Changed(next, format!("You pour the {x} into the {y}."))
}

fn unary(state: &WorldState, verb: Verb, obj: &WorldObject) -> Outcome {
    let x = obj.id.as_str();
    let physics = &rules().physics;
    let edit = |f: &dyn Fn(&mut WorldObject), msg: String| {
        let mut next = state.clone();
        f(next.objects.get_mut(x).unwrap());
        Changed(next, msg)
    };
    match verb {
        Verb::Take => {
            if obj.location == Location::Held {
                Silent
            } else if !obj.portable {
                Rejected(format!("You can't take the {x}."))
            } else {
                edit(
                    &|o| o.location = Location::Held,
                    format!("You take the {x}."),
                )
            }
        }
        Verb::Drop => {
            if obj.location != Location::Held {
                Rejected(format!("You can't drop the {x}, you are not holding it."))
            } else {
                let room = state.agent_room.clone();
                edit(
                    &|o| o.location = Location::Room(room.clone()),
                    format!("You drop the {x}."),
                )
            }
        }
        Verb::Open | Verb::Close => {
            let want_open = verb == Verb::Open;
            if !obj.openable {
                Rejected(format!("You can't {} the {x}.", verb.word()))
            } else if obj.open == want_open {
                Silent
            } else {
                edit(
                    &|o| o.open = want_open,
                    format!("You {} the {x}.", verb.word()),
                )
            }
        }
        Verb::Activate | Verb::Deactivate => {
            let want_on = verb == Verb::Activate;
            if obj.kind != Kind::Device {
                Rejected(format!("You can't {} the {x}.", verb.word()))
            } else if obj.active == want_on {
                Silent
            } else {
                edit(
                    &|o| o.active = want_on,
                    format!("You {} the {x}.", verb.word()),
                )
            }
        }
        Verb::Push => Silent,
        Verb::Eat => {
            let edible = obj
                .substance
                .as_deref()
                .and_then(|s| rules().substance(s))
                .is_some_and(|s| s.edible);
            if obj.kind == Kind::SubstancePortion && edible && obj.phase != Some(Phase::Gas) {
                let mut next = state.clone();
                next.objects.remove(x);
                Changed(next, format!("You eat the {x}."))
            } else {
                Rejected(format!("You can't eat the {x}."))
            }
        }
        Verb::Heat | Verb::Cool => {
            if obj.kind != Kind::SubstancePortion {
                return Rejected(format!("You can't {} the {x}.", verb.word()));
            }
            let (role, target) = if verb == Verb::Heat {
                (
                    Role::Heater,
                    (obj.temperature + physics.heat_step).min(physics.heat_max),
                )
            } else {
                (
                    Role::Cooler,
                    (obj.temperature - physics.cool_step).max(physics.cool_min),
                )
            };
            if state.active_device_here(role).is_none() || target == obj.temperature {
                Silent
            } else {
                edit(
                    &|o| o.temperature = target,
                    format!("The {x} is now {target} degrees."),
                )
            }
        }
        Verb::Water => {
            if obj.kind != Kind::Plant {
                Rejected(format!("You can't water the {x}."))
            } else if !state.holds_tool(Role::WateringCan) {
                Rejected(format!("You can't water the {x} without a watering can."))
            } else {
                let planted = match &obj.location {
                    Location::In(p) => state.get(p).is_some_and(|c| c.role == Some(Role::Planter)),
                    _ => false,
                };
                let stage = obj.growth.unwrap_or(0);
                if !planted || stage >= physics.max_growth {
                    Silent
                } else {
                    edit(&|o| o.growth = Some(stage + 1), format!("The {x} grows."))
                }
            }
        }
        Verb::Measure => {
            if obj.kind != Kind::SubstancePortion {
                Rejected(format!("You can't measure the {x}."))
            } else if !state.holds_tool(Role::Thermometer) {
                Rejected(format!("You can't measure the {x} without a thermometer."))
            } else {
                let reading = Reading {
                    object: x.to_string(),
                    temperature: obj.temperature,
                };
                if state.readings.contains(&reading) {
                    Silent
                } else {
                    let mut next = state.clone();
                    next.readings.insert(reading);
                    Changed(
                        next,
                        format!("The thermometer reads {} degrees.", obj.temperature),
                    )
                }
            }
        }
        Verb::Mix => {
            if obj.kind != Kind::Container {
                return Rejected(format!("You can't mix the {x}."));
            }
            let portions: Vec<&WorldObject> = state
                .children(x)
                .into_iter()
                .filter(|c| c.kind == Kind::SubstancePortion)
                .collect();
            let [a, b] = portions.as_slice() else {
                return Silent;
            };
            let (Some(sa), Some(sb)) = (a.substance.as_deref(), b.substance.as_deref()) else {
                return Silent;
            };
            let Some(reaction) = rules().reaction_for(sa, sb) else {
                return Silent;
            };
            if state.get(&reaction.product).is_some() {
                return Silent;
            }
            let temperature = (a.temperature + b.temperature).div_euclid(2);
            let mut next = state.clone();
            next.objects.remove(&a.id);
            next.objects.remove(&b.id);
            next.insert(WorldObject::portion(
                &reaction.product,
                Location::In(x.to_string()),
                temperature,
            ));
            Changed(
                next,
                format!("You mix the {x} and make {}.", reaction.product),
            )
        }
        Verb::Wait | Verb::Go | Verb::Put | Verb::Pour => unreachable!("handled by apply"),
    }
}

/// Active devices heat or cool everything inside them by one step.
fn passive_tick(state: &mut WorldState) {
    let physics = &rules().physics;
    let deltas: Vec<(String, i32)> = state
        .objects
        .values()
        .filter(|o| o.kind == Kind::SubstancePortion)
        .filter_map(|o| {
            let device = state
                .ancestors(&o.id)
                .into_iter()
                .filter_map(|p| state.get(p))
                .find(|p| p.kind == Kind::Device && p.active)?;
            let t = match device.role {
                Some(Role::Heater) => (o.temperature + physics.heat_step).min(physics.heat_max),
                Some(Role::Cooler) => (o.temperature - physics.cool_step).max(physics.cool_min),
                _ => return None,
            };
            Some((o.id.clone(), t))
        })
        .collect();
    for (id, t) in deltas {
        state.objects.get_mut(&id).unwrap().temperature = t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kitchen(stove_on: bool, water_temp: i32, pot_on_stove: bool) -> WorldState {
        let mut s = WorldState::new("kitchen");
        s.insert(WorldObject::device(
            "stove",
            "kitchen",
            Role::Heater,
            false,
            stove_on,
        ));
        let pot_loc = if pot_on_stove {
            Location::In("stove".into())
        } else {
            Location::Room("kitchen".into())
        };
        s.insert(WorldObject::vessel("pot", pot_loc));
        s.insert(WorldObject::portion(
            "water",
            Location::In("pot".into()),
            water_temp,
        ));
        s
    }

    fn run(s: &WorldState, text: &str) -> (WorldState, Feedback) {
        step(s, &Action::parse(text).unwrap())
    }

    #[test]
    fn wait_heats_pot_on_active_stove() {
        let s = kitchen(true, 20, true);
        let (next, fb) = run(&s, "wait");
        assert_eq!(fb.class, FeedbackClass::Effective);
        assert_eq!(next.get("water").unwrap().temperature, 45);
    }

    #[test]
    fn boiling_point_crossing_turns_water_to_gas() {
        let s = kitchen(true, 95, true);
        let (next, _) = run(&s, "wait");
        let water = next.get("water").unwrap();
        assert_eq!(water.temperature, 120);
        assert_eq!(water.phase, Some(Phase::Gas));
    }

    #[test]
    fn heating_caps_at_device_max() {
        let s = kitchen(true, 240, true);
        let (next, _) = run(&s, "wait");
        assert_eq!(next.get("water").unwrap().temperature, 250);
    }

    #[test]
    fn push_is_silent_and_eat_is_rejected() {
        let s = kitchen(false, 20, false);
        let (next, fb) = run(&s, "push stove");
        assert_eq!(next, s);
        assert_eq!(fb.class, FeedbackClass::Silent);
        assert_eq!(fb.message, "Nothing happens.");

        let (next, fb) = run(&s, "eat stove");
        assert_eq!(next, s);
        assert_eq!(fb.class, FeedbackClass::Rejected);
        assert_eq!(fb.message, "You can't eat the stove.");
    }

    #[test]
    fn activate_stove_is_effective_once() {
        let s = kitchen(false, 20, false);
        let (on, fb) = run(&s, "activate stove");
        assert_eq!(fb.class, FeedbackClass::Effective);
        assert!(on.get("stove").unwrap().active);
        let (_, again) = run(&on, "activate stove");
        assert_eq!(again.class, FeedbackClass::Silent);
        let (_, off) = run(&s, "deactivate stove");
        assert_eq!(off.class, FeedbackClass::Silent);
    }

    #[test]
    fn heat_requires_active_heater_here() {
        let cold = kitchen(false, 20, false);
        assert_eq!(run(&cold, "heat water").1.class, FeedbackClass::Silent);
        assert_eq!(run(&cold, "cool water").1.class, FeedbackClass::Silent);
        let hot = kitchen(true, 20, false);
        let (next, fb) = run(&hot, "heat water");
        assert_eq!(fb.class, FeedbackClass::Effective);
        assert_eq!(next.get("water").unwrap().temperature, 45);
        assert_eq!(run(&hot, "heat pot").1.class, FeedbackClass::Rejected);
    }

    #[test]
    fn parse_error_is_a_feedback_class() {
        let s = kitchen(false, 20, false);
        let (next, fb) = step_text(&s, "juggle the stove please");
        assert_eq!(next, s);
        assert_eq!(fb.class, FeedbackClass::ParseError);
    }

    #[test]
    fn invisible_targets_are_rejected() {
        let s = kitchen(false, 20, false);
        let (_, fb) = run(&s, "take thermometer");
        assert_eq!(fb.class, FeedbackClass::Rejected);
        assert!(fb.message.starts_with("You can't"));
    }

    #[test]
    fn put_take_and_pour_move_things() {
        let s = kitchen(false, 20, false);
        let (held, fb) = run(&s, "take pot");
        assert_eq!(fb.class, FeedbackClass::Effective);
        assert!(held.is_held("water"));
        let (placed, fb) = run(&held, "put pot in stove");
        assert_eq!(fb.class, FeedbackClass::Effective);
        assert_eq!(
            placed.get("pot").unwrap().location,
            Location::In("stove".into())
        );
        assert_eq!(run(&s, "put pot in stove").1.class, FeedbackClass::Rejected);
        assert_eq!(
            run(&held, "put pot in pot").1.class,
            FeedbackClass::Rejected
        );
        assert_eq!(
            run(&held, "pour water in pot").1.class,
            FeedbackClass::Silent
        );
    }

    #[test]
    fn mixing_salt_and_water_makes_salt_water() {
        let mut s = WorldState::new("kitchen");
        s.insert(WorldObject::vessel("beaker", Location::Held));
        s.insert(WorldObject::portion(
            "salt",
            Location::In("beaker".into()),
            20,
        ));
        s.insert(WorldObject::portion(
            "water",
            Location::In("beaker".into()),
            30,
        ));
        let (next, fb) = run(&s, "mix beaker");
        assert_eq!(fb.class, FeedbackClass::Effective);
        let brine = next.get("salt-water").unwrap();
        assert_eq!(brine.temperature, 25);
        assert_eq!(brine.phase, Some(Phase::Liquid));
        assert!(next.get("salt").is_none() && next.get("water").is_none());
        assert_eq!(run(&next, "mix beaker").1.class, FeedbackClass::Silent);
    }

    #[test]
    fn measure_records_each_temperature_once() {
        let mut s = kitchen(true, 20, false);
        s.insert(WorldObject::instrument(
            "thermometer",
            Location::Held,
            Some(Role::Thermometer),
        ));
        let (next, fb) = run(&s, "measure water");
        assert_eq!(fb.class, FeedbackClass::Effective);
        assert_eq!(next.readings.len(), 1);
        assert_eq!(run(&next, "measure water").1.class, FeedbackClass::Silent);
    }

    #[test]
    fn watering_advances_growth_until_max() {
        let mut s = WorldState::new("greenhouse");
        s.insert(WorldObject::planter(
            "flowerpot",
            Location::Room("greenhouse".into()),
        ));
        s.insert(WorldObject::plant("bean", Location::In("flowerpot".into())));
        assert_eq!(run(&s, "water bean").1.class, FeedbackClass::Rejected);
        s.insert(WorldObject::instrument(
            "wateringcan",
            Location::Held,
            Some(Role::WateringCan),
        ));
        for stage in 1..=4 {
            let (next, fb) = run(&s, "water bean");
            assert_eq!(fb.class, FeedbackClass::Effective);
            assert_eq!(next.get("bean").unwrap().growth, Some(stage));
            s = next;
        }
        assert_eq!(run(&s, "water bean").1.class, FeedbackClass::Silent);
    }

    #[test]
    fn movement_respects_doors() {
        let s = WorldState::new("kitchen");
        assert_eq!(run(&s, "go to hallway").1.class, FeedbackClass::Effective);
        assert_eq!(run(&s, "go to kitchen").1.class, FeedbackClass::Silent);
        assert_eq!(run(&s, "go to greenhouse").1.class, FeedbackClass::Rejected);
        assert_eq!(run(&s, "go to stove").1.class, FeedbackClass::Rejected);
    }
}
