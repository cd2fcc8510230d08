//! Random task suites and the value-space versus state-space comparison.

mod stats;
mod svg;

use std::fmt;
use std::io;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{mpc_run, z_signal, PlannerConfig, PlannerKind, WorldModel};
use crate::seed;
use crate::stl::{robustness, Cmp, Formula, Interval};
use crate::vfs::{embed_state, VfsPoint};
use crate::world::{reset_world, WorldConfig};

pub use stats::{quartiles, FamilySummary, SpaceStats, SummaryStats};
pub use svg::write_boxplot_svg;

/// Threshold on critic readings used by every generated task.
pub const THETA: f64 = 0.8;

/// Redraws allowed per reach-avoid sample before giving up on a formula
/// whose avoid condition already holds at the start.
const MAX_FORMULA_DRAWS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFamily {
    Sequencing,
    ReachAvoid,
    Stability,
}

impl TaskFamily {
    pub const ALL: [TaskFamily; 3] = [TaskFamily::Sequencing, TaskFamily::ReachAvoid, TaskFamily::Stability];

    pub fn name(self) -> &'static str {
        match self {
            TaskFamily::Sequencing => "sequencing",
            TaskFamily::ReachAvoid => "reach_avoid",
            TaskFamily::Stability => "stability",
        }
    }

    /// Parses a comma-separated list; `all` selects every family.
    pub fn parse_list(s: &str) -> Result<Vec<TaskFamily>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Self::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Config("no task family selected".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for TaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequencing" | "chain" => Ok(TaskFamily::Sequencing),
            "reach_avoid" | "reach-avoid" => Ok(TaskFamily::ReachAvoid),
            "stability" | "stable" => Ok(TaskFamily::Stability),
            other => Err(Error::Config(format!("unknown task family '{other}'"))),
        }
    }
}

fn reach(color: &str) -> Formula {
    Formula::pred(color, Cmp::Gt, THETA)
}

fn window(hi: usize) -> Interval {
    Interval::new(0, hi).expect("0 <= hi")
}

/// Random task of `family` over `colors`, with horizon at most `t`.
///
/// * sequencing: `F[0,a1] (c1>θ & F[0,a2] (c2>θ & F[0,a3] c3>θ))` over two
///   or three distinct colors, each `a_i` in `1..=3`.
/// * reach-avoid: `¬(avoid>θ) U[0,b] (goal>θ & ...)` with one or two
///   levels, all colors distinct, each `b` in `2..=4`.
/// * stability: `F[0,a] G[0,d] c>θ`, `a` in `1..=4`, `d` in `2..=6`.
pub fn gen_formula(family: TaskFamily, colors: &[String], t: usize, seed: u64) -> Result<Formula> {
    let mut rng = seed::rng(seed::derive(seed, "formula", family as u64));
    let mut pool: Vec<&str> = colors.iter().map(String::as_str).collect();
    pool.sort_unstable();
    pool.dedup();
    pool.shuffle(&mut rng);
    let infeasible = |why: String| Err(Error::Config(format!("cannot generate {family} task: {why}")));

    match family {
        TaskFamily::Sequencing => {
            if pool.len() < 2 || t < 2 {
                return infeasible(format!("needs 2 colors and T >= 2, got {} and {t}", pool.len()));
            }
            let mut n = rng.gen_range(2..=3.min(pool.len()));
            while n > 1 && n > t {
                n -= 1;
            }
            let mut windows: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
            while windows.iter().sum::<usize>() > t {
                let i = (0..n).max_by_key(|&i| (windows[i], i)).expect("n >= 1");
                windows[i] -= 1;
            }
            let mut f = Formula::eventually(window(windows[n - 1]), reach(pool[n - 1]));
            for i in (0..n - 1).rev() {
                f = Formula::eventually(window(windows[i]), Formula::and(reach(pool[i]), f));
            }
            Ok(f)
        }
        TaskFamily::ReachAvoid => {
            if pool.len() < 2 || t < 2 {
                return infeasible(format!("needs 2 colors and T >= 2, got {} and {t}", pool.len()));
            }
            let levels = if pool.len() >= 4 && t >= 4 { rng.gen_range(1..=2) } else { 1 };
            let mut bounds: Vec<usize> = (0..levels).map(|_| rng.gen_range(2..=4)).collect();
            while bounds.iter().sum::<usize>() > t {
                let i = (0..levels).max_by_key(|&i| (bounds[i], i)).expect("levels >= 1");
                bounds[i] -= 1;
            }
            let level = |i: usize, inner: Option<Formula>| {
                let (avoid, goal) = (pool[2 * i], pool[2 * i + 1]);
                let right = match inner {
                    Some(rest) => Formula::and(reach(goal), rest),
                    None => reach(goal),
                };
                Formula::until(window(bounds[i]), Formula::not(reach(avoid)), right)
            };
            let mut f = level(levels - 1, None);
            for i in (0..levels - 1).rev() {
                f = level(i, Some(f));
            }
            Ok(f)
        }
        TaskFamily::Stability => {
            if pool.is_empty() || t < 3 {
                return infeasible(format!("needs a color and T >= 3, got {} and {t}", pool.len()));
            }
            let a = rng.gen_range(1..=4.min(t - 2));
            let d = rng.gen_range(2..=6.min(t - a));
            Ok(Formula::eventually(window(a), Formula::globally(window(d), reach(pool[0]))))
        }
    }
}

/// True unless the formula is an Until whose left operand already fails on
/// the first reading, which no plan can repair.
fn admissible_at_start(f: &Formula, z0: &VfsPoint, channels: &[String]) -> Result<bool> {
    match f {
        Formula::Until { left, .. } => Ok(robustness(&z_signal(std::slice::from_ref(z0), channels)?, left, 0)? > 0.0),
        _ => Ok(true),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub families: Vec<TaskFamily>,
    pub samples_per_family: usize,
    pub planner: PlannerConfig,
    /// Re-plan every `planner.replan_interval` steps; otherwise execute one
    /// plan open-loop.
    pub mpc: bool,
    pub seed: u64,
    /// Run samples on the rayon pool.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            families: TaskFamily::ALL.to_vec(),
            samples_per_family: 50,
            planner: PlannerConfig::default(),
            mpc: false,
            seed: 0,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub family: TaskFamily,
    pub sample: usize,
    pub seed: u64,
    pub formula: String,
    /// Robustness of the realized value-function trajectory.
    pub vfs_robustness: f64,
    /// Robustness the first plan predicted under the model.
    pub predicted_robustness: f64,
    pub gt_robustness: f64,
    /// Set when the sample could not be run; robustness fields are NaN.
    pub error: Option<String>,
}

impl BenchRecord {
    pub fn success_vfs(&self) -> bool {
        self.vfs_robustness > 0.0
    }

    pub fn success_gt(&self) -> bool {
        self.gt_robustness > 0.0
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

pub fn sample_seed(root: u64, family: TaskFamily, sample: usize) -> u64 {
    seed::derive(seed::derive(root, family.name(), 0), "sample", sample as u64)
}

/// Runs every (family, sample) pair and returns records sorted by family
/// and sample index. A sample that errors is kept with its error message.
pub fn run_benchmark<M: WorldModel>(world: &WorldConfig, model: &M, cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    world.validate()?;
    cfg.planner.validate()?;
    let jobs: Vec<(TaskFamily, usize)> = cfg
        .families
        .iter()
        .flat_map(|&f| (0..cfg.samples_per_family).map(move |s| (f, s)))
        .collect();
    let run = |&(family, sample): &(TaskFamily, usize)| run_sample(world, model, cfg, family, sample);
    let mut records: Vec<BenchRecord> = if cfg.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };
    records.sort_by_key(|r| (r.family, r.sample));
    Ok(records)
}

fn run_sample<M: WorldModel>(
    world: &WorldConfig,
    model: &M,
    cfg: &BenchConfig,
    family: TaskFamily,
    sample: usize,
) -> BenchRecord {
    let seed = sample_seed(cfg.seed, family, sample);
    let mut record = BenchRecord {
        family,
        sample,
        seed,
        formula: String::new(),
        vfs_robustness: f64::NAN,
        predicted_robustness: f64::NAN,
        gt_robustness: f64::NAN,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let reset_seed = seed::derive(seed, "reset", 0);
        let start = reset_world(world, reset_seed)?;
        let channels = start.world.channel_names();
        let z0 = embed_state(&start.state, &start.world);
        let mut formula = gen_formula(family, &channels, cfg.planner.horizon, seed)?;
        for draw in 1..MAX_FORMULA_DRAWS {
            if admissible_at_start(&formula, &z0, &channels)? {
                break;
            }
            formula = gen_formula(family, &channels, cfg.planner.horizon, seed::derive(seed, "redraw", draw))?;
        }
        record.formula = formula.to_string();
        let planner = PlannerConfig {
            seed: seed::derive(seed, "planner", 0),
            replan_interval: if cfg.mpc { cfg.planner.replan_interval } else { cfg.planner.horizon },
            ..cfg.planner.clone()
        };
        let run = mpc_run(world, model, &formula, &planner, PlannerKind::Mcts, reset_seed)?;
        record.vfs_robustness = run.realized_vfs_robustness;
        record.predicted_robustness = run.predicted_robustness();
        record.gt_robustness = run.ground_truth_robustness;
        Ok(())
    })();
    if let Err(e) = outcome {
        record.error = Some(e.to_string());
    }
    record
}

const CSV_HEADER: [&str; 9] = [
    "family",
    "sample",
    "seed",
    "formula",
    "vfs_robustness",
    "predicted_robustness",
    "gt_robustness",
    "success_vfs",
    "success_gt",
];

/// Failed samples are written with `NaN` robustness and no successes.
pub fn write_records_csv<W: io::Write>(records: &[BenchRecord], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for r in records {
        wtr.write_record([
            r.family.name().to_owned(),
            r.sample.to_string(),
            r.seed.to_string(),
            r.formula.clone(),
            r.vfs_robustness.to_string(),
            r.predicted_robustness.to_string(),
            r.gt_robustness.to_string(),
            r.success_vfs().to_string(),
            r.success_gt().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads records back; success columns are checked against the stored
/// robustness values.
pub fn read_records_csv<R: io::Read>(reader: R) -> Result<Vec<BenchRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    if rdr.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::Signal("unexpected benchmark CSV header".into()));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::Signal(format!("row {}: bad {what}", i + 1));
        let num = |j: usize, what: &str| row[j].parse::<f64>().map_err(|_| bad(what));
        let flag = |j: usize, what: &str| row[j].parse::<bool>().map_err(|_| bad(what));
        let r = BenchRecord {
            family: row[0].parse()?,
            sample: row[1].parse().map_err(|_| bad("sample"))?,
            seed: row[2].parse().map_err(|_| bad("seed"))?,
            formula: row[3].to_owned(),
            vfs_robustness: num(4, "vfs_robustness")?,
            predicted_robustness: num(5, "predicted_robustness")?,
            gt_robustness: num(6, "gt_robustness")?,
            error: None,
        };
        let r = if r.vfs_robustness.is_nan() {
            BenchRecord {
                error: Some("failed sample".into()),
                ..r
            }
        } else {
            r
        };
        if flag(7, "success_vfs")? != r.success_vfs() || flag(8, "success_gt")? != r.success_gt() {
            return Err(Error::Signal(format!("row {}: success flags disagree with robustness", i + 1)));
        }
        out.push(r);
    }
    Ok(out)
}
