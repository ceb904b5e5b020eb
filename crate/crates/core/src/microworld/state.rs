use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::rules::{rules, Phase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SubstancePortion,
    Container,
    Device,
    Fixture,
    Plant,
    Instrument,
}

/// What a device or tool does. Objects without a role are inert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Heater,
    Cooler,
    Thermometer,
    WateringCan,
    Planter,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "at", content = "id")]
pub enum Location {
    Room(String),
    In(String),
    Held,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldObject {
    pub id: String,
    pub kind: Kind,
    pub location: Location,
    pub temperature: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Phase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(default)]
    pub active: bool,
    #[serde(default)]
    pub openable: bool,
    #[serde(default)]
    pub open: bool,
    #[serde(default)]
    pub portable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<u8>,
}

impl WorldObject {
    fn base(id: &str, kind: Kind, location: Location) -> Self {
        WorldObject {
            id: id.to_string(),
            kind,
            location,
            temperature: 20,
            substance: None,
            phase: None,
            role: None,
            active: false,
            openable: false,
            open: false,
            portable: false,
            growth: None,
        }
    }

    pub fn portion(substance: &str, location: Location, temperature: i32) -> Self {
        let mut o = Self::base(substance, Kind::SubstancePortion, location);
        o.substance = Some(substance.to_string());
        o.temperature = temperature;
        o.phase = rules()
            .substance(substance)
            .map(|s| s.phase_at(temperature));
        o
    }

    pub fn vessel(id: &str, location: Location) -> Self {
        let mut o = Self::base(id, Kind::Container, location);
        o.portable = true;
        o
    }

    pub fn storage(id: &str, room: &str) -> Self {
        let mut o = Self::base(id, Kind::Container, Location::Room(room.to_string()));
        o.openable = true;
        o
    }

    pub fn device(id: &str, room: &str, role: Role, openable: bool, active: bool) -> Self {
        let mut o = Self::base(id, Kind::Device, Location::Room(room.to_string()));
        o.role = Some(role);
        o.openable = openable;
        o.active = active;
        o
    }

    pub fn fixture(id: &str, room: &str) -> Self {
        Self::base(id, Kind::Fixture, Location::Room(room.to_string()))
    }

    pub fn plant(id: &str, location: Location) -> Self {
        let mut o = Self::base(id, Kind::Plant, location);
        o.portable = true;
        o.growth = Some(0);
        o
    }

    pub fn instrument(id: &str, location: Location, role: Option<Role>) -> Self {
        let mut o = Self::base(id, Kind::Instrument, location);
        o.portable = true;
        o.role = role;
        o
    }

    pub fn planter(id: &str, location: Location) -> Self {
        let mut o = Self::vessel(id, location);
        o.role = Some(Role::Planter);
        o
    }

    /// Can other objects be placed inside this one?
    pub fn is_receptacle(&self) -> bool {
        matches!(self.kind, Kind::Container)
            || matches!(self.role, Some(Role::Heater) | Some(Role::Cooler))
    }

    /// Are this object's contents reachable (and visible)?
    pub fn is_accessible_inside(&self) -> bool {
        self.is_receptacle() && (!self.openable || self.open)
    }
}

/// One thermometer observation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Reading {
    pub object: String,
    pub temperature: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub objects: BTreeMap<String, WorldObject>,
    pub agent_room: String,
    #[serde(default)]
    pub readings: BTreeSet<Reading>,
    #[serde(default)]
    pub tick: u32,
}

impl WorldState {
    pub fn new(agent_room: &str) -> Self {
        WorldState {
            objects: BTreeMap::new(),
            agent_room: agent_room.to_string(),
            readings: BTreeSet::new(),
            tick: 0,
        }
    }

    pub fn insert(&mut self, object: WorldObject) {
        self.objects.insert(object.id.clone(), object);
    }

    pub fn get(&self, id: &str) -> Option<&WorldObject> {
        self.objects.get(id)
    }

    /// Ids of objects the agent is carrying directly, sorted.
    pub fn inventory(&self) -> Vec<&str> {
        self.objects
            .values()
            .filter(|o| o.location == Location::Held)
            .map(|o| o.id.as_str())
            .collect()
    }

    pub fn children(&self, id: &str) -> Vec<&WorldObject> {
        self.objects
            .values()
            .filter(|o| matches!(&o.location, Location::In(p) if p == id))
            .collect()
    }

    /// The chain of enclosing object ids, innermost first.
    pub fn ancestors(&self, id: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.objects.get(id);
        while let Some(o) = cur {
            match &o.location {
                Location::In(p) => {
                    if out.contains(&p.as_str()) {
                        break;
                    }
                    out.push(p.as_str());
                    cur = self.objects.get(p);
                }
                _ => break,
            }
        }
        out
    }

    /// Where the outermost enclosing object sits.
    pub fn root_location(&self, id: &str) -> Option<&Location> {
        let outer = self.ancestors(id).last().copied().unwrap_or(id);
        self.objects.get(outer).map(|o| &o.location)
    }

    /// True when the object is carried, directly or inside something carried.
    pub fn is_held(&self, id: &str) -> bool {
        matches!(self.root_location(id), Some(Location::Held))
    }

    /// Visible objects are in the agent's room or inventory with every
    /// enclosing receptacle open.
    pub fn is_visible(&self, id: &str) -> bool {
        let Some(root) = self.root_location(id) else {
            return false;
        };
        let placed_here = match root {
            Location::Held => true,
            Location::Room(r) => *r == self.agent_room,
            Location::In(_) => false,
        };
        placed_here
            && self.ancestors(id).iter().all(|p| {
                self.objects
                    .get(*p)
                    .is_some_and(|o| o.is_accessible_inside())
            })
    }

    pub fn visible_ids(&self) -> Vec<&str> {
        self.objects
            .keys()
            .map(String::as_str)
            .filter(|id| self.is_visible(id))
            .collect()
    }

    /// Active device of the given role standing in the agent's room.
    pub fn active_device_here(&self, role: Role) -> Option<&WorldObject> {
        self.objects.values().find(|o| {
            o.kind == Kind::Device
                && o.role == Some(role)
                && o.active
                && o.location == Location::Room(self.agent_room.clone())
        })
    }

    pub fn holds_tool(&self, role: Role) -> bool {
        self.objects
            .values()
            .any(|o| o.role == Some(role) && o.location == Location::Held)
    }

    /// Recompute every portion's phase from its temperature.
    pub fn refresh_phases(&mut self) {
        let table = rules();
        for o in self.objects.values_mut() {
            if let Some(name) = &o.substance {
                o.phase = table.substance(name).map(|s| s.phase_at(o.temperature));
            }
        }
    }

    /// Phase of every portion matches the rule table at its temperature.
    pub fn phases_consistent(&self) -> bool {
        let table = rules();
        self.objects.values().all(|o| match &o.substance {
            Some(name) => table.substance(name).map(|s| s.phase_at(o.temperature)) == o.phase,
            None => o.phase.is_none(),
        })
    }

    /// Structural invariants: locations resolve, containment is acyclic, one agent room.
    pub fn check_invariants(&self) -> Result<(), String> {
        let table = rules();
        if !table.is_room(&self.agent_room) {
            return Err(format!("agent in unknown room {}", self.agent_room));
        }
        for o in self.objects.values() {
            match &o.location {
                Location::Room(r) if !table.is_room(r) => {
                    return Err(format!("{} in unknown room {r}", o.id));
                }
                Location::In(p) => {
                    let parent = self
                        .objects
                        .get(p)
                        .ok_or_else(|| format!("{} inside missing {p}", o.id))?;
                    if !parent.is_receptacle() {
                        return Err(format!("{} inside non-receptacle {p}", o.id));
                    }
                    if self.ancestors(&o.id).contains(&o.id.as_str()) {
                        return Err(format!("containment cycle through {}", o.id));
                    }
                }
                _ => {}
            }
        }
        if !self.phases_consistent() {
            return Err("phase inconsistent with temperature".into());
        }
        Ok(())
    }

    /// The part of the state the agent can observe, with the tick counter dropped.
    pub fn observable(&self) -> ObservableState {
        let objects = self
            .visible_ids()
            .into_iter()
            .map(|id| self.objects[id].clone())
            .collect();
        ObservableState {
            agent_room: self.agent_room.clone(),
            objects,
            readings: self.readings.clone(),
        }
    }
}

/// Projection of a [`WorldState`] onto what the renderer shows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservableState {
    pub agent_room: String,
    pub objects: Vec<WorldObject>,
    pub readings: BTreeSet<Reading>,
}
