//! Task families, per-variation layouts and scripted gold trajectories.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::action::{Action, Verb};
use super::candidates::enumerate_candidates;
use super::physics::{step, FeedbackClass};
use super::render::render_state;
use super::rules::{rules, Phase};
use super::state::{Kind, Location, Role, WorldObject, WorldState};
use crate::error::{Error, Result};
use crate::rng;

pub const MAX_VARIATION: u32 = 9;
pub const MIN_GOLD_LEN: usize = 8;
pub const MAX_GOLD_LEN: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Boil,
    Melt,
    GrowPlant,
    Thermometer,
    ChemistryMix,
    MeasureMeltingPoint,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Boil,
        Family::Melt,
        Family::GrowPlant,
        Family::Thermometer,
        Family::ChemistryMix,
        Family::MeasureMeltingPoint,
    ];
    pub const IN_DOMAIN: [Family; 3] = [Family::GrowPlant, Family::Boil, Family::Melt];
    pub const OOD: [Family; 3] = [
        Family::Thermometer,
        Family::ChemistryMix,
        Family::MeasureMeltingPoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Boil => "boil",
            Family::Melt => "melt",
            Family::GrowPlant => "grow-plant",
            Family::Thermometer => "thermometer",
            Family::ChemistryMix => "chemistry-mix",
            Family::MeasureMeltingPoint => "measure-melting-point",
        }
    }

    pub fn is_ood(self) -> bool {
        Family::OOD.contains(&self)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown task family {s:?}")))
    }
}

/// Every object name any layout can produce. Feeds the scorer vocabulary.
pub const OBJECT_NAMES: &[&str] = &[
    // fixed furniture
    "painting",
    "stove",
    "freezer",
    "cupboard",
    "table",
    "window",
    "bench",
    "burner",
    "drawer",
    "workbench",
    // task objects
    "pot",
    "pan",
    "kettle",
    "jar",
    "bottle",
    "beaker",
    "flask",
    "bowl",
    "bean",
    "tomato",
    "sunflower",
    "flowerpot",
    "planter",
    "wateringcan",
    "thermometer",
    // distractors
    "cup",
    "tray",
    "basket",
    "lamp",
    "book",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Spot {
    Cupboard,
    Freezer,
    Drawer,
    Kitchen,
    Workshop,
    Greenhouse,
    Hallway,
}

impl Spot {
    fn location(self) -> Location {
        match self {
            Spot::Cupboard => Location::In("cupboard".into()),
            Spot::Freezer => Location::In("freezer".into()),
            Spot::Drawer => Location::In("drawer".into()),
            Spot::Kitchen => Location::Room("kitchen".into()),
            Spot::Workshop => Location::Room("workshop".into()),
            Spot::Greenhouse => Location::Room("greenhouse".into()),
            Spot::Hallway => Location::Room("hallway".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Probe {
    Heat(&'static str),
    Cool,
}

use Spot::*;

// (vessel, target substance, where the vessel starts, heater)
const BOIL: [(&str, &str, Spot, &str); 10] = [
    ("pot", "water", Cupboard, "stove"),
    ("pan", "salt-water", Freezer, "stove"),
    ("kettle", "water", Drawer, "burner"),
    ("pot", "salt-water", Hallway, "burner"),
    ("pan", "water", Freezer, "burner"),
    ("kettle", "salt-water", Cupboard, "stove"),
    ("pot", "water", Drawer, "stove"),
    ("pan", "water", Hallway, "stove"),
    ("kettle", "salt-water", Freezer, "burner"),
    ("pot", "salt-water", Drawer, "stove"),
];

const MELT: [(&str, &str, Spot, &str); 10] = [
    ("pan", "wax", Cupboard, "stove"),
    ("pot", "chocolate", Freezer, "burner"),
    ("kettle", "wax", Drawer, "stove"),
    ("pan", "chocolate", Workshop, "stove"),
    ("pot", "wax", Hallway, "burner"),
    ("kettle", "chocolate", Cupboard, "burner"),
    ("pan", "wax", Freezer, "stove"),
    ("pot", "chocolate", Drawer, "stove"),
    ("kettle", "wax", Kitchen, "burner"),
    ("pan", "chocolate", Hallway, "burner"),
];

// (plant, planter, where the seed starts, where the watering can starts)
const GROW: [(&str, &str, Spot, Spot); 10] = [
    ("bean", "flowerpot", Drawer, Greenhouse),
    ("tomato", "planter", Cupboard, Workshop),
    ("sunflower", "flowerpot", Greenhouse, Hallway),
    ("bean", "planter", Hallway, Kitchen),
    ("tomato", "flowerpot", Drawer, Greenhouse),
    ("sunflower", "planter", Cupboard, Workshop),
    ("bean", "flowerpot", Greenhouse, Kitchen),
    ("tomato", "planter", Hallway, Greenhouse),
    ("sunflower", "flowerpot", Drawer, Workshop),
    ("bean", "planter", Cupboard, Hallway),
];

// (vessel, target, vessel spot, probe, thermometer spot)
const THERMO: [(&str, &str, Spot, Probe, Spot); 10] = [
    ("pot", "water", Cupboard, Probe::Heat("stove"), Drawer),
    ("pan", "chocolate", Drawer, Probe::Cool, Workshop),
    (
        "kettle",
        "salt-water",
        Hallway,
        Probe::Heat("burner"),
        Kitchen,
    ),
    ("pot", "chocolate", Cupboard, Probe::Cool, Drawer),
    ("pan", "water", Workshop, Probe::Heat("stove"), Kitchen),
    ("kettle", "water", Drawer, Probe::Cool, Workshop),
    ("pot", "salt-water", Kitchen, Probe::Heat("burner"), Drawer),
    ("pan", "salt-water", Cupboard, Probe::Cool, Kitchen),
    (
        "kettle",
        "chocolate",
        Hallway,
        Probe::Heat("stove"),
        Workshop,
    ),
    ("pot", "water", Drawer, Probe::Heat("burner"), Kitchen),
];

// (product, mixing vessel, jar spot, bottle spot, vessel spot)
const CHEM: [(&str, &str, Spot, Spot, Spot); 10] = [
    ("salt-water", "beaker", Cupboard, Workshop, Workshop),
    ("syrup", "flask", Drawer, Kitchen, Kitchen),
    ("salt-water", "bowl", Hallway, Kitchen, Workshop),
    ("syrup", "beaker", Cupboard, Workshop, Greenhouse),
    ("salt-water", "flask", Drawer, Hallway, Kitchen),
    ("syrup", "bowl", Hallway, Workshop, Kitchen),
    ("salt-water", "beaker", Drawer, Kitchen, Greenhouse),
    ("syrup", "flask", Cupboard, Hallway, Workshop),
    ("salt-water", "bowl", Cupboard, Kitchen, Greenhouse),
    ("syrup", "beaker", Drawer, Workshop, Workshop),
];

// (target, vessel, vessel spot, heater, thermometer spot)
const MMP: [(&str, &str, Spot, &str, Spot); 10] = [
    ("wax", "pot", Cupboard, "stove", Drawer),
    ("chocolate", "pan", Drawer, "burner", Kitchen),
    ("sugar", "kettle", Hallway, "stove", Workshop),
    ("wax", "pan", Freezer, "burner", Workshop),
    ("chocolate", "kettle", Cupboard, "stove", Drawer),
    ("sugar", "pot", Drawer, "burner", Kitchen),
    ("wax", "kettle", Kitchen, "stove", Drawer),
    ("chocolate", "pot", Hallway, "burner", Workshop),
    ("sugar", "pan", Cupboard, "stove", Kitchen),
    ("wax", "pot", Drawer, "burner", Workshop),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub family: Family,
    pub variation: u32,
    pub seed: u64,
    /// Id of the object the goal predicate tracks.
    pub target: String,
    pub initial_state: WorldState,
    pub gold_trajectory: Vec<Action>,
}

impl Episode {
    pub fn is_heldout(&self) -> bool {
        self.variation >= 7
    }

    /// States visited along the gold path: `states[i]` precedes `gold_trajectory[i]`;
    /// the last entry is the final state.
    pub fn replay(&self) -> Result<Vec<WorldState>> {
        let mut states = vec![self.initial_state.clone()];
        for (i, action) in self.gold_trajectory.iter().enumerate() {
            let (next, fb) = step(states.last().unwrap(), action);
            if fb.class != FeedbackClass::Effective {
                return Err(Error::Generation(format!(
                    "{} v{} seed {} step {i}: gold action {:?} was {}",
                    self.family, self.variation, self.seed, action.surface, fb.class
                )));
            }
            states.push(next);
        }
        Ok(states)
    }

    pub fn goal_reached(&self, state: &WorldState) -> bool {
        goal_reached(self.family, &self.target, state)
    }

    /// Serialisable view: rendered states, classified candidates, gold surfaces.
    pub fn export(&self) -> Result<EpisodeRecord> {
        let states = self.replay()?;
        let steps = self
            .gold_trajectory
            .iter()
            .zip(&states)
            .map(|(gold, state)| EpisodeStep {
                state_prompt: render_state(state),
                candidates: enumerate_candidates(state)
                    .candidates
                    .into_iter()
                    .map(|c| CandidateRecord {
                        surface: c.action.surface,
                        class: c.class,
                    })
                    .collect(),
                gold_surface: gold.surface.clone(),
            })
            .collect();
        Ok(EpisodeRecord {
            schema_version: crate::SCHEMA_VERSION,
            family: self.family,
            variation: self.variation,
            seed: self.seed,
            steps,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub surface: String,
    pub class: FeedbackClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeStep {
    pub state_prompt: String,
    pub candidates: Vec<CandidateRecord>,
    pub gold_surface: String,
}

/// One line of the episode JSONL export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub schema_version: u32,
    pub family: Family,
    pub variation: u32,
    pub seed: u64,
    pub steps: Vec<EpisodeStep>,
}

impl EpisodeRecord {
    /// Regenerate the structured episode and check it against this record.
    pub fn restore(&self) -> Result<Episode> {
        if self.schema_version != crate::SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "episode schema_version {} (expected {})",
                self.schema_version,
                crate::SCHEMA_VERSION
            )));
        }
        let episode = init_episode(self.family, self.variation, self.seed)?;
        let gold: Vec<&str> = episode
            .gold_trajectory
            .iter()
            .map(|a| a.surface.as_str())
            .collect();
        let recorded: Vec<&str> = self.steps.iter().map(|s| s.gold_surface.as_str()).collect();
        if gold != recorded {
            return Err(Error::Data(format!(
                "{} v{} seed {}: recorded gold path does not match the generator",
                self.family, self.variation, self.seed
            )));
        }
        Ok(episode)
    }
}

pub fn goal_reached(family: Family, target: &str, state: &WorldState) -> bool {
    let obj = state.get(target);
    let readings: Vec<i32> = state
        .readings
        .iter()
        .filter(|r| r.object == target)
        .map(|r| r.temperature)
        .collect();
    match family {
        Family::Boil => obj.is_some_and(|o| o.phase == Some(Phase::Gas)),
        Family::Melt => obj.is_some_and(|o| o.phase == Some(Phase::Liquid)),
        Family::GrowPlant => obj.is_some_and(|o| o.growth == Some(rules().physics.max_growth)),
        Family::Thermometer => match (readings.iter().min(), readings.iter().max()) {
            (Some(lo), Some(hi)) => hi - lo >= 50,
            _ => false,
        },
        Family::ChemistryMix => obj.is_some_and(|o| o.kind == Kind::SubstancePortion),
        Family::MeasureMeltingPoint => {
            let Some(sub) = rules().substance(target) else {
                return false;
            };
            readings.iter().any(|t| sub.phase_at(*t) == Phase::Solid)
                && readings.iter().any(|t| sub.phase_at(*t) == Phase::Liquid)
        }
    }
}

fn base_world(seed: u64) -> WorldState {
    let rooms = &rules().rooms;
    let mut s = WorldState::new(&rooms[(seed % rooms.len() as u64) as usize]);
    s.insert(WorldObject::fixture("painting", "hallway"));
    s.insert(WorldObject::device(
        "stove",
        "kitchen",
        Role::Heater,
        false,
        false,
    ));
    s.insert(WorldObject::device(
        "freezer",
        "kitchen",
        Role::Cooler,
        true,
        true,
    ));
    s.insert(WorldObject::storage("cupboard", "kitchen"));
    s.insert(WorldObject::fixture("table", "kitchen"));
    s.insert(WorldObject::fixture("window", "greenhouse"));
    s.insert(WorldObject::fixture("bench", "greenhouse"));
    s.insert(WorldObject::device(
        "burner",
        "workshop",
        Role::Heater,
        false,
        false,
    ));
    s.insert(WorldObject::storage("drawer", "workshop"));
    s.insert(WorldObject::fixture("workbench", "workshop"));
    s
}

fn start_temperature(spot: Spot, seed: u64) -> i32 {
    let offset = 5 * (seed % 3) as i32;
    if spot == Spot::Freezer {
        -10 - offset
    } else {
        20 - offset
    }
}

fn place_vessel(s: &mut WorldState, vessel: &str, substance: &str, spot: Spot, seed: u64) {
    s.insert(WorldObject::vessel(vessel, spot.location()));
    s.insert(WorldObject::portion(
        substance,
        Location::In(vessel.into()),
        start_temperature(spot, seed),
    ));
}

/// Seeded clutter: up to two objects unrelated to any task.
fn add_distractors(s: &mut WorldState, seed: u64) {
    let mut rng = rng::stream(seed, "distractors");
    let count = rng.gen_range(0..=2);
    let mut pool = ["cup", "tray", "basket", "lamp", "book"];
    pool.shuffle(&mut rng);
    let rooms = &rules().rooms;
    for name in pool.into_iter().take(count) {
        let room = rooms[rng.gen_range(0..rooms.len())].clone();
        match name {
            "lamp" => s.insert(WorldObject::fixture(name, &room)),
            "book" => s.insert(WorldObject::instrument(name, Location::Room(room), None)),
            "tray" => {
                s.insert(WorldObject::vessel(name, Location::Room(room)));
                s.insert(WorldObject::portion("iron", Location::In(name.into()), 20));
            }
            _ => s.insert(WorldObject::vessel(name, Location::Room(room))),
        }
    }
}

/// Runs gold actions against a live state, refusing anything non-effective.
struct Script {
    initial: WorldState,
    state: WorldState,
    actions: Vec<Action>,
}

impl Script {
    fn new(state: WorldState) -> Self {
        Script {
            initial: state.clone(),
            state,
            actions: Vec::new(),
        }
    }

    fn exec(&mut self, action: Action) -> Result<()> {
        let (next, fb) = step(&self.state, &action);
        if fb.class != FeedbackClass::Effective {
            return Err(Error::Generation(format!(
                "scripted action {:?} was {} ({})",
                action.surface, fb.class, fb.message
            )));
        }
        self.state = next;
        self.actions.push(action);
        Ok(())
    }

    fn unary(&mut self, verb: Verb, x: &str) -> Result<()> {
        self.exec(Action::unary(verb, x))
    }

    fn goto(&mut self, room: &str) -> Result<()> {
        if self.state.agent_room == room {
            return Ok(());
        }
        if self.state.agent_room != "hallway" {
            self.exec(Action::go("hallway"))?;
        }
        if room != "hallway" {
            self.exec(Action::go(room))?;
        }
        Ok(())
    }

    fn room_of(&self, id: &str) -> Result<String> {
        match self.state.root_location(id) {
            Some(Location::Room(r)) => Ok(r.clone()),
            other => Err(Error::Generation(format!(
                "{id} is not placed in a room: {other:?}"
            ))),
        }
    }

    /// Walk to an object, open its storage if needed, pick it up, close up again.
    fn fetch(&mut self, id: &str) -> Result<()> {
        if self.state.is_held(id) {
            return Ok(());
        }
        let room = self.room_of(id)?;
        self.goto(&room)?;
        let parent = match &self.state.get(id).map(|o| o.location.clone()) {
            Some(Location::In(p)) => Some(p.clone()),
            _ => None,
        };
        let opened = match &parent {
            Some(p) if self.state.get(p).is_some_and(|o| o.openable && !o.open) => {
                self.unary(Verb::Open, p)?;
                Some(p.clone())
            }
            _ => None,
        };
        self.unary(Verb::Take, id)?;
        if let Some(p) = opened {
            self.unary(Verb::Close, &p)?;
        }
        Ok(())
    }

    fn repeat_until(
        &mut self,
        mut done: impl FnMut(&WorldState) -> bool,
        action: impl Fn() -> Action,
    ) -> Result<()> {
        for _ in 0..MAX_GOLD_LEN {
            if done(&self.state) {
                return Ok(());
            }
            self.exec(action())?;
        }
        Err(Error::Generation("loop did not reach its condition".into()))
    }

    fn phase(&self, id: &str) -> Option<Phase> {
        self.state.get(id).and_then(|o| o.phase)
    }
}

fn heater_room(heater: &str) -> &'static str {
    if heater == "burner" {
        "workshop"
    } else {
        "kitchen"
    }
}

/// Build an episode: layout from `(family, variation)`, clutter and start
/// temperatures from `seed`, gold path from the family script.
pub fn init_episode(family: Family, variation: u32, seed: u64) -> Result<Episode> {
    if variation > MAX_VARIATION {
        return Err(Error::Config(format!(
            "variation {variation} outside 0..={MAX_VARIATION}"
        )));
    }
    let v = variation as usize;
    let mut world = base_world(seed);
    let target: String;

    let script = match family {
        Family::Boil => {
            let (vessel, substance, spot, heater) = BOIL[v];
            place_vessel(&mut world, vessel, substance, spot, seed);
            add_distractors(&mut world, seed);
            target = substance.to_string();
            let mut sc = Script::new(world);
            sc.fetch(vessel)?;
            sc.goto(heater_room(heater))?;
            sc.unary(Verb::Activate, heater)?;
            sc.repeat_until(
                |s| s.get(substance).and_then(|o| o.phase) == Some(Phase::Gas),
                || Action::unary(Verb::Heat, substance),
            )?;
            sc.unary(Verb::Deactivate, heater)?;
            sc
        }
        Family::Melt => {
            let (vessel, substance, spot, heater) = MELT[v];
            place_vessel(&mut world, "jar", substance, spot, seed);
            world.insert(WorldObject::vessel(
                vessel,
                Location::Room(heater_room(heater).into()),
            ));
            add_distractors(&mut world, seed);
            target = substance.to_string();
            let mut sc = Script::new(world);
            sc.fetch("jar")?;
            sc.fetch(vessel)?;
            sc.exec(Action::binary(Verb::Pour, substance, vessel))?;
            sc.goto(heater_room(heater))?;
            sc.exec(Action::binary(Verb::Put, vessel, heater))?;
            sc.unary(Verb::Activate, heater)?;
            sc.repeat_until(
                |s| s.get(substance).and_then(|o| o.phase) == Some(Phase::Liquid),
                Action::wait,
            )?;
            sc.unary(Verb::Deactivate, heater)?;
            sc.unary(Verb::Take, vessel)?;
            sc
        }
        Family::GrowPlant => {
            let (plant, planter, seed_spot, can_spot) = GROW[v];
            world.insert(WorldObject::planter(
                planter,
                Location::Room("greenhouse".into()),
            ));
            world.insert(WorldObject::plant(plant, seed_spot.location()));
            world.insert(WorldObject::instrument(
                "wateringcan",
                can_spot.location(),
                Some(Role::WateringCan),
            ));
            add_distractors(&mut world, seed);
            target = plant.to_string();
            let mut sc = Script::new(world);
            sc.fetch(plant)?;
            sc.fetch("wateringcan")?;
            sc.goto("greenhouse")?;
            sc.exec(Action::binary(Verb::Put, plant, planter))?;
            let max = rules().physics.max_growth;
            sc.repeat_until(
                |s| s.get(plant).and_then(|o| o.growth) == Some(max),
                || Action::unary(Verb::Water, plant),
            )?;
            sc
        }
        Family::Thermometer => {
            let (vessel, substance, spot, probe, thermo_spot) = THERMO[v];
            place_vessel(&mut world, vessel, substance, spot, seed);
            world.insert(WorldObject::instrument(
                "thermometer",
                thermo_spot.location(),
                Some(Role::Thermometer),
            ));
            add_distractors(&mut world, seed);
            target = substance.to_string();
            let mut sc = Script::new(world);
            sc.fetch("thermometer")?;
            sc.fetch(vessel)?;
            let (room, verb) = match probe {
                Probe::Heat(heater) => (heater_room(heater), Verb::Heat),
                Probe::Cool => ("kitchen", Verb::Cool),
            };
            sc.goto(room)?;
            let start = sc.state.get(substance).map(|o| o.temperature).unwrap_or(0);
            sc.unary(Verb::Measure, substance)?;
            if let Probe::Heat(heater) = probe {
                sc.unary(Verb::Activate, heater)?;
            }
            sc.repeat_until(
                |s| {
                    s.get(substance)
                        .is_some_and(|o| (o.temperature - start).abs() >= 50)
                },
                || Action::unary(verb, substance),
            )?;
            sc.unary(Verb::Measure, substance)?;
            if let Probe::Heat(heater) = probe {
                sc.unary(Verb::Deactivate, heater)?;
            }
            sc
        }
        Family::ChemistryMix => {
            let (product, vessel, jar_spot, bottle_spot, vessel_spot) = CHEM[v];
            let solute = if product == "syrup" { "sugar" } else { "salt" };
            place_vessel(&mut world, "jar", solute, jar_spot, seed);
            place_vessel(&mut world, "bottle", "water", bottle_spot, seed);
            world.insert(WorldObject::vessel(vessel, vessel_spot.location()));
            add_distractors(&mut world, seed);
            target = product.to_string();
            let mut sc = Script::new(world);
            sc.fetch("jar")?;
            sc.fetch("bottle")?;
            sc.fetch(vessel)?;
            sc.exec(Action::binary(Verb::Pour, solute, vessel))?;
            sc.exec(Action::binary(Verb::Pour, "water", vessel))?;
            sc.unary(Verb::Mix, vessel)?;
            sc
        }
        Family::MeasureMeltingPoint => {
            let (substance, vessel, spot, heater, thermo_spot) = MMP[v];
            place_vessel(&mut world, vessel, substance, spot, seed);
            world.insert(WorldObject::instrument(
                "thermometer",
                thermo_spot.location(),
                Some(Role::Thermometer),
            ));
            add_distractors(&mut world, seed);
            target = substance.to_string();
            let mut sc = Script::new(world);
            sc.fetch("thermometer")?;
            sc.fetch(vessel)?;
            sc.goto(heater_room(heater))?;
            sc.unary(Verb::Activate, heater)?;
            for _ in 0..MAX_GOLD_LEN {
                sc.unary(Verb::Measure, substance)?;
                if sc.phase(substance) == Some(Phase::Liquid) {
                    break;
                }
                sc.unary(Verb::Heat, substance)?;
            }
            sc.unary(Verb::Deactivate, heater)?;
            sc
        }
    };

    let episode = Episode {
        family,
        variation,
        seed,
        target,
        initial_state: script.initial,
        gold_trajectory: script.actions,
    };
    validate(&episode)?;
    Ok(episode)
}

fn validate(episode: &Episode) -> Result<()> {
    let len = episode.gold_trajectory.len();
    if !(MIN_GOLD_LEN..=MAX_GOLD_LEN).contains(&len) {
        return Err(Error::Generation(format!(
            "{} v{} seed {}: gold length {len} outside {MIN_GOLD_LEN}..={MAX_GOLD_LEN}",
            episode.family, episode.variation, episode.seed
        )));
    }
    let states = episode.replay()?;
    for s in &states {
        s.check_invariants().map_err(Error::Generation)?;
    }
    if !episode.goal_reached(states.last().unwrap()) {
        return Err(Error::Generation(format!(
            "{} v{} seed {}: gold path ends without reaching the goal",
            episode.family, episode.variation, episode.seed
        )));
    }
    Ok(())
}
