//! Contrastive action-feasibility scoring on a deterministic micro text-world.
//!
//! The crate is organised bottom-up:
//!
//! - [`microworld`]: the simulated environment, task families and gold trajectories
//! - [`negmine`]: typed negative mining and training-instance assembly
//! - [`scorer`]: the two-tower bilinear scorer with analytic gradients
//! - [`training`]: InfoNCE + margin objective, BCE baseline, Adam loop, data split
//! - [`metrics`]: ranking and retention metrics plus fuzzy gold matching
//! - [`harness`]: intrinsic test-set construction and both evaluation studies

pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod microworld;
pub mod negmine;
pub mod rng;
pub mod scorer;
pub mod training;

pub use error::{Error, Result};

/// Version tag written into every JSON/JSONL record and checkpoint header.
pub const SCHEMA_VERSION: u32 = 1;
