//! Value-function space.
//!
//! A state is summarized by the vector of every skill's critic reading,
//! each in `[0, 1]` and equal to one exactly when that skill's goal is
//! reached. The planner never sees positions, only these vectors and a
//! learned model of how they move when a skill runs.

mod dataset;
pub mod gridmdp;
mod model;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{RobotState, WorldConfig};

pub use dataset::{collect_transitions, TransitionDataset, TransitionRecord};
pub use model::{train_dynamics, DynamicsModel, Layer, TrainConfig, TrainReport};

/// Stacked skill critic readings, one component per skill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VfsPoint(Vec<f64>);

impl VfsPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Signal(format!("value-function reading {v} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    /// Clamps every component into `[0, 1]`; NaN maps to 0.
    pub fn clamped(values: Vec<f64>) -> Self {
        Self(
            values
                .into_iter()
                .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for VfsPoint {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Analytic stand-in for a goal-reaching critic:
/// `clamp(1 - d / reach, 0, 1)` with `d` the distance to the nearest zone
/// boundary of the skill's color and `reach` the arena diameter.
///
/// Exactly 1 only at distance 0; positive distances too small to register
/// map to the largest reading below 1.
pub fn critic_value(distance_to_goal: f64, reach: f64) -> f64 {
    let v = (1.0 - distance_to_goal / reach).clamp(0.0, 1.0);
    if distance_to_goal > 0.0 && v == 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        v
    }
}

pub fn embed_state(state: &RobotState, world: &WorldConfig) -> VfsPoint {
    let reach = world.diameter();
    VfsPoint(
        world
            .skills()
            .iter()
            .map(|s| critic_value(world.boundary_distance(state.pos, s.target_color), reach))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Color;

    fn at(x: f64, y: f64) -> RobotState {
        RobotState {
            pos: [x, y],
            heading: 0.0,
        }
    }

    #[test]
    fn inside_zone_reads_one() {
        let w = WorldConfig::default();
        let z = embed_state(&at(-1.45, 1.4), &w);
        assert_eq!(z[0], 1.0);
        assert!(z.as_slice()[1..].iter().all(|&v| v < 1.0));
    }

    #[test]
    fn critic_formula() {
        assert_eq!(critic_value(0.0, 4.0), 1.0);
        assert_eq!(critic_value(4.0, 4.0), 0.0);
        assert_eq!(critic_value(9.0, 4.0), 0.0);
        assert_eq!(critic_value(2.0, 4.0), 0.5);
        assert!(critic_value(1e-17, 4.0) < 1.0);
    }

    #[test]
    fn reading_at_half_reach() {
        // Both white zones sit at (±1.5, 0) with r = 0.3, so on the y axis
        // the boundary distance is sqrt(2.25 + y²) - 0.3; y² = 3.04 gives 2.0.
        let w = WorldConfig::default();
        let p = at(0.0, 3.04f64.sqrt());
        assert!((w.boundary_distance(p.pos, Color::W) - 2.0).abs() < 1e-12);
        let z = embed_state(&p, &w);
        assert!((z[3] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn readings_stay_in_unit_interval() {
        let w = WorldConfig::default();
        for i in 0..=20 {
            for j in 0..=20 {
                let p = at(-2.0 + 0.2 * i as f64, -2.0 + 0.2 * j as f64);
                let z = embed_state(&p, &w);
                assert!(VfsPoint::new(z.clone().into_inner()).is_ok());
                for (k, c) in Color::ALL.iter().enumerate() {
                    assert_eq!(z[k] == 1.0, w.boundary_distance(p.pos, *c) == 0.0);
                }
            }
        }
    }

    #[test]
    fn point_validation() {
        assert!(VfsPoint::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(VfsPoint::new(vec![1.01]).is_err());
        assert_eq!(VfsPoint::clamped(vec![-0.2, 1.3, f64::NAN]).as_slice(), &[0.0, 1.0, 0.0]);
    }
}
