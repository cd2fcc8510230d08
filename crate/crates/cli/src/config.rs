use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use vfstl_core::bench::TaskFamily;
use vfstl_core::planner::{PlannerConfig, PlannerKind, UcbVariant};
use vfstl_core::vfs::TrainConfig;
use vfstl_core::world::WorldConfig;

use crate::Flags;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            steps_per_episode: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchOptions {
    pub families: Vec<TaskFamily>,
    pub samples: usize,
    /// Re-plan every `planner.replan_interval` steps instead of open-loop.
    pub mpc: bool,
    pub parallel: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            families: TaskFamily::ALL.to_vec(),
            samples: 50,
            mpc: false,
            parallel: false,
        }
    }
}

/// Everything a run depends on. Written back, fully resolved, into every
/// manifest, so a manifest is itself a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub formula: Option<String>,
    pub dataset: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub world: WorldConfig,
    pub collect: CollectConfig,
    pub train: TrainConfig,
    pub planner: PlannerConfig,
    pub planner_kind: PlannerKind,
    pub bench: BenchOptions,
}

impl Config {
    /// Reads a config document or a previous run's manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut value: Value =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if value.get("subcommand").is_some() {
            value = value
                .get_mut("config")
                .map(Value::take)
                .context("manifest has no 'config' section")?;
        }
        serde_json::from_value(value).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn resolve(flags: &Flags) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        cfg.apply(flags)?;
        cfg.world.validate()?;
        cfg.planner.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, flags: &Flags) -> Result<()> {
        if let Some(seed) = flags.seed {
            self.seed = seed;
        }
        if let Some(f) = &flags.formula {
            self.formula = Some(f.clone());
        }
        if let Some(p) = &flags.dataset {
            self.dataset = Some(p.clone());
        }
        if let Some(p) = &flags.model {
            self.model = Some(p.clone());
        }
        if let Some(tau) = flags.tau {
            self.world.tau = tau;
        }
        if let Some(h) = flags.horizon {
            self.planner.horizon = h;
        }
        if let Some(n) = flags.iterations {
            self.planner.iterations = n;
        }
        if let Some(c) = flags.ucb_c {
            self.planner.exploration = c;
        }
        if let Some(v) = flags.ucb_variant {
            self.planner.ucb_variant = match v {
                crate::UcbArg::Paper => UcbVariant::Paper,
                crate::UcbArg::Uct => UcbVariant::Uct,
            };
        }
        if let Some(r) = flags.replan_interval {
            self.planner.replan_interval = r;
            self.bench.mpc = true;
        }
        if let Some(n) = flags.samples {
            self.bench.samples = n;
        }
        if let Some(f) = &flags.families {
            self.bench.families = TaskFamily::parse_list(f)?;
        }
        if flags.parallel {
            self.bench.parallel = true;
        }
        if self.bench.families.is_empty() {
            bail!("no task family selected");
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub subcommand: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub config: &'a Config,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}
