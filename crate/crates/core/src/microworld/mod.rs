//! Deterministic micro text-world: rooms, objects, thermodynamic and growth
//! rules, six task families with scripted expert trajectories.

pub mod action;
pub mod candidates;
pub mod episode;
pub mod physics;
pub mod render;
pub mod rules;
pub mod state;

pub use action::{Action, Verb};
pub use candidates::{enumerate_candidates, Candidate, CandidateSet};
pub use episode::{init_episode, Episode, EpisodeRecord, Family};
pub use physics::{classify, step, step_text, Feedback, FeedbackClass};
pub use render::render_state;
pub use rules::{rules, Phase, Substance};
pub use state::{Kind, Location, Role, WorldObject, WorldState};
