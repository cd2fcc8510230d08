use serde::{Deserialize, Serialize};

use super::mcts::{plan_mcts, replan_seed};
use super::{exhaustive_best, z_signal, PlanResult, PlannerConfig, Problem, WorldModel};
use crate::error::{Error, Result};
use crate::stl::{robustness, Formula, Signal};
use crate::vfs::{embed_state, VfsPoint};
use crate::world::{execute_skill, ground_truth_formula, ground_truth_signal, reset_world, RobotState, WorldConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    #[default]
    Mcts,
    Exhaustive,
}

/// One closed-loop episode.
#[derive(Debug, Clone)]
pub struct MpcRun {
    /// Layout the episode ran in.
    pub world: WorldConfig,
    /// Every env step, `horizon * tau + 1` states.
    pub states: Vec<RobotState>,
    /// Executed skill per macro-step.
    pub skills: Vec<usize>,
    /// Realized readings at macro-step boundaries, `horizon + 1` points.
    pub executed_z: Vec<VfsPoint>,
    /// Plans in the order they were made.
    pub plans: Vec<PlanResult>,
    /// Zone-membership signal sampled at macro-step boundaries.
    pub ground_truth: Signal,
    pub ground_truth_robustness: f64,
    pub realized_vfs_robustness: f64,
}

impl MpcRun {
    /// Robustness the first plan predicted.
    pub fn predicted_robustness(&self) -> f64 {
        self.plans[0].predicted_robustness
    }
}

/// Resets the world with `seed`, then alternates planning over the whole
/// remaining horizon and executing the first `cfg.replan_interval` skills
/// until `cfg.horizon` macro-steps have run. `replan_interval >= horizon`
/// gives open-loop execution of a single plan.
///
/// The model is re-anchored at the observed state before each plan, and
/// already executed readings are fixed as history.
pub fn mpc_run<D: WorldModel>(
    world: &WorldConfig,
    model: &D,
    formula: &Formula,
    cfg: &PlannerConfig,
    kind: PlannerKind,
    seed: u64,
) -> Result<MpcRun> {
    cfg.validate()?;
    if cfg.horizon == 0 {
        return Err(Error::Planner("plan horizon must be at least 1".into()));
    }
    let reset = reset_world(world, seed)?;
    let world = reset.world;
    let channels = world.channel_names();
    let skill_set = world.skills();
    let mut state = reset.state;
    let mut states = vec![state];
    let mut executed_z = vec![embed_state(&state, &world)];
    let mut skills = Vec::with_capacity(cfg.horizon);
    let mut plans = Vec::new();

    while skills.len() < cfg.horizon {
        let t = skills.len();
        let root = model.observe(&state, &world);
        let problem = Problem::new(model, formula, &channels, cfg.horizon).with_history(&executed_z[..t]);
        let plan = match kind {
            PlannerKind::Mcts => {
                let cfg_t = PlannerConfig {
                    seed: replan_seed(cfg, t),
                    ..cfg.clone()
                };
                plan_mcts(&root, &problem, &cfg_t)?.1
            }
            PlannerKind::Exhaustive => exhaustive_best(&root, &problem)?,
        };
        let n = cfg.replan_interval.min(cfg.horizon - t);
        for &id in &plan.skills[..n] {
            let skill = skill_set
                .get(id)
                .copied()
                .ok_or_else(|| Error::Planner(format!("planned skill {id} does not exist")))?;
            let micro = execute_skill(&state, skill, &world);
            states.extend_from_slice(&micro[1..]);
            state = *micro.last().expect("non-empty");
            executed_z.push(embed_state(&state, &world));
            skills.push(id);
        }
        plans.push(plan);
    }

    let stride = world.tau.max(1);
    let ground_truth = ground_truth_signal(&states, &world, stride)?;
    let ground_truth_robustness = robustness(&ground_truth, &ground_truth_formula(formula), 0)?;
    let realized_vfs_robustness = robustness(&z_signal(&executed_z, &channels)?, formula, 0)?;
    Ok(MpcRun {
        world,
        states,
        skills,
        executed_z,
        plans,
        ground_truth,
        ground_truth_robustness,
        realized_vfs_robustness,
    })
}
