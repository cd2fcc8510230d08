//! Scheduling goal-reaching skills to satisfy signal temporal logic tasks.
//!
//! The pipeline abstracts a 2D navigation world into the space of skill
//! value functions, learns how that abstraction evolves when a skill runs,
//! and searches skill sequences with Monte-Carlo tree search so that the
//! robustness of the task formula, evaluated on predicted value readings, is
//! maximal.
//!
//! - [`stl`]: formula syntax, horizon, robustness and Boolean monitors.
//! - [`world`]: the deterministic zone world and its reference skills.
//! - [`vfs`]: value-function embedding, transition data, the learned
//!   dynamics network and tabular reachability oracles.
//! - [`planner`]: tree search, exhaustive search and receding-horizon control.
//! - [`bench`]: random task families and the robustness comparison study.

pub mod bench;
pub mod error;
pub mod planner;
pub mod seed;
pub mod stl;
pub mod vfs;
pub mod world;

pub use error::{Error, Result};
