//! Skill-sequence search in value-function space.
//!
//! A plan is scored by the robustness of the task formula on the sequence
//! of value-function readings it is predicted to produce. [`mcts`] searches
//! with a UCB tree policy and random rollouts; [`exhaustive`] enumerates
//! every sequence and serves as the reference optimum; [`mpc`] executes
//! plans in the world with periodic re-planning.

pub mod exhaustive;
pub mod mcts;
pub mod mpc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stl::{robustness, Formula, Signal};
use crate::vfs::{embed_state, DynamicsModel, VfsPoint};
use crate::world::{skill_outcome, RobotState, WorldConfig};

pub use exhaustive::exhaustive_best;
pub use mcts::{build_tree, mean_policy, optimal_policy, plan_mcts, rollout, ucb, SearchTree, TreeNode};
pub use mpc::{mpc_run, MpcRun, PlannerKind};

/// Largest number of sequences [`exhaustive_best`] will enumerate.
pub const EXHAUSTIVE_BUDGET: usize = 1_000_000;

/// Transition model the planner searches over.
pub trait Dynamics: Sync {
    type State: Clone + Send + Sync;

    fn num_skills(&self) -> usize;

    /// State after running `skill` for one macro-step.
    fn step(&self, state: &Self::State, skill: usize) -> Self::State;

    /// Value-function reading of a state.
    fn reading(&self, state: &Self::State) -> VfsPoint;
}

/// A [`Dynamics`] that can start from an observed robot state.
pub trait WorldModel: Dynamics {
    fn observe(&self, robot: &RobotState, world: &WorldConfig) -> Self::State;
}

impl Dynamics for DynamicsModel {
    type State = VfsPoint;

    fn num_skills(&self) -> usize {
        self.k
    }

    fn step(&self, state: &VfsPoint, skill: usize) -> VfsPoint {
        self.predict_next(state, skill)
    }

    fn reading(&self, state: &VfsPoint) -> VfsPoint {
        state.clone()
    }
}

impl WorldModel for DynamicsModel {
    fn observe(&self, robot: &RobotState, world: &WorldConfig) -> VfsPoint {
        embed_state(robot, world)
    }
}

/// Perfect model backed by the simulator itself.
#[derive(Debug, Clone)]
pub struct SimulatorDynamics {
    pub world: WorldConfig,
}

impl Dynamics for SimulatorDynamics {
    type State = RobotState;

    fn num_skills(&self) -> usize {
        self.world.skills().len()
    }

    fn step(&self, state: &RobotState, skill: usize) -> RobotState {
        let skill = self.world.skill(skill).expect("skill id in range");
        skill_outcome(state, skill, &self.world)
    }

    fn reading(&self, state: &RobotState) -> VfsPoint {
        embed_state(state, &self.world)
    }
}

impl WorldModel for SimulatorDynamics {
    fn observe(&self, robot: &RobotState, _world: &WorldConfig) -> RobotState {
        *robot
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UcbVariant {
    /// `Score/N + c·sqrt(N_parent)/N`.
    #[default]
    Paper,
    /// `Score/N + c·sqrt(ln N_parent / N)`.
    Uct,
}

/// How the plan is read off a finished search tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Follow the child with the largest summed score.
    Score,
    /// Follow the child with the largest mean score.
    Mean,
    /// Take the best complete sequence any rollout reached.
    #[default]
    BestRollout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Total plan length T in macro-steps.
    pub horizon: usize,
    pub iterations: usize,
    /// Exploration constant of the UCB score.
    pub exploration: f64,
    #[serde(default)]
    pub ucb_variant: UcbVariant,
    #[serde(default)]
    pub selection: Selection,
    pub seed: u64,
    pub replan_interval: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            iterations: 2000,
            exploration: 1.0,
            ucb_variant: UcbVariant::Paper,
            selection: Selection::BestRollout,
            seed: 0,
            replan_interval: 1,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.replan_interval == 0 {
            return Err(Error::Config("replan_interval must be at least 1".into()));
        }
        if !(self.exploration >= 0.0 && self.exploration.is_finite()) {
            return Err(Error::Config(format!(
                "exploration constant must be non-negative, got {}",
                self.exploration
            )));
        }
        Ok(())
    }
}

/// What to optimize: the formula over the whole `horizon + 1` sample
/// trajectory, part of which (`history`) may already have happened.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a, D> {
    pub dynamics: &'a D,
    pub formula: &'a Formula,
    /// Channel name of each value-function component.
    pub channels: &'a [String],
    /// Readings already executed before the current one.
    pub history: &'a [VfsPoint],
    /// Total number of macro-steps T.
    pub horizon: usize,
}

impl<'a, D: Dynamics> Problem<'a, D> {
    pub fn new(dynamics: &'a D, formula: &'a Formula, channels: &'a [String], horizon: usize) -> Self {
        Self {
            dynamics,
            formula,
            channels,
            history: &[],
            horizon,
        }
    }

    pub fn with_history(mut self, history: &'a [VfsPoint]) -> Self {
        self.history = history;
        self
    }

    /// Macro-steps still to be planned from the current state.
    pub fn remaining(&self) -> usize {
        self.horizon - self.history.len()
    }

    pub fn validate(&self) -> Result<()> {
        let needed = self.formula.horizon();
        if self.horizon < needed {
            return Err(Error::Planner(format!(
                "plan horizon {} is shorter than the formula horizon {needed}",
                self.horizon
            )));
        }
        if self.history.len() > self.horizon {
            return Err(Error::Planner(format!(
                "history of {} steps exceeds the plan horizon {}",
                self.history.len(),
                self.horizon
            )));
        }
        if self.channels.len() != self.dynamics.num_skills() {
            return Err(Error::Planner(format!(
                "{} channel names for {} skills",
                self.channels.len(),
                self.dynamics.num_skills()
            )));
        }
        if let Some(c) = self
            .formula
            .channels()
            .into_iter()
            .find(|c| !self.channels.iter().any(|n| n == c))
        {
            return Err(Error::UnknownChannel(c.to_owned()));
        }
        Ok(())
    }

    /// Robustness at time 0 of a full trajectory.
    pub fn score(&self, trajectory: &[VfsPoint]) -> Result<f64> {
        robustness(&z_signal(trajectory, self.channels)?, self.formula, 0)
    }

    /// History, the current reading and the readings along `skills`.
    pub fn simulate(&self, start: &D::State, skills: &[usize]) -> Vec<VfsPoint> {
        let mut traj = self.history.to_vec();
        traj.push(self.dynamics.reading(start));
        let mut s = start.clone();
        for &k in skills {
            s = self.dynamics.step(&s, k);
            traj.push(self.dynamics.reading(&s));
        }
        traj
    }
}

/// One channel per value-function component; sample `t` is `traj[t]`.
pub fn z_signal(traj: &[VfsPoint], channels: &[String]) -> Result<Signal> {
    if traj.is_empty() {
        return Err(Error::Signal("empty value-function trajectory".into()));
    }
    Signal::new(
        channels
            .iter()
            .enumerate()
            .map(|(i, name)| (name.as_str(), traj.iter().map(|z| z[i]).collect())),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    /// Macro-step index at which planning started (length of the history).
    pub start: usize,
    /// Skills for macro-steps `start..horizon`.
    pub skills: Vec<usize>,
    /// History, current reading and predicted readings: `horizon + 1` points.
    pub predicted_z_trajectory: Vec<VfsPoint>,
    pub predicted_robustness: f64,
}

impl PlanResult {
    fn from_skills<D: Dynamics>(problem: &Problem<'_, D>, start: &D::State, skills: Vec<usize>) -> Result<Self> {
        let traj = problem.simulate(start, &skills);
        let predicted_robustness = problem.score(&traj)?;
        Ok(Self {
            start: problem.history.len(),
            skills,
            predicted_z_trajectory: traj,
            predicted_robustness,
        })
    }
}
