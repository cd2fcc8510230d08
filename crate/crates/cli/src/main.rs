//! `vfstl`: monitor formulas offline and run the planning pipeline.
//!
//! Exit codes: 0 success (or a satisfied formula for `monitor`), 1 a
//! violated or boundary formula, 2 formula syntax error, 3 signal too short
//! for the formula, 4 any other failure.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use vfstl_core::bench::{run_benchmark, write_boxplot_svg, write_records_csv, BenchConfig, SummaryStats};
use vfstl_core::planner::{exhaustive_best, mpc_run, plan_mcts, PlannerConfig, PlannerKind, Problem};
use vfstl_core::seed::derive;
use vfstl_core::stl::{parse_formula, robustness, Formula, ParseError, Signal};
use vfstl_core::vfs::{collect_transitions, embed_state, train_dynamics, DynamicsModel, TransitionDataset};
use vfstl_core::world::{reset_world, write_trajectory_csv};

use config::{Config, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "vfstl", version, about = "STL task planning in value-function space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Evaluate a formula on a CSV signal.
    Monitor,
    /// Record skill transitions in value-function space.
    Collect,
    /// Fit the value-function dynamics model.
    Train,
    /// Plan a skill sequence from a reset state.
    Plan,
    /// Plan and execute with re-planning.
    Mpc,
    /// Run the random-task benchmark.
    Bench,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Monitor => "monitor",
            Command::Collect => "collect",
            Command::Train => "train",
            Command::Plan => "plan",
            Command::Mpc => "mpc",
            Command::Bench => "bench",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum UcbArg {
    Paper,
    Uct,
}

#[derive(clap::Args, Debug, Default)]
struct Flags {
    /// JSON config document, or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "vfstl-out")]
    out: PathBuf,
    #[arg(long, global = true)]
    formula: Option<String>,
    /// Signal CSV with a header row of channel names.
    #[arg(long, global = true)]
    signal: Option<PathBuf>,
    /// Evaluation time index for `monitor`.
    #[arg(long, global = true, default_value_t = 0)]
    t: usize,
    #[arg(long, global = true)]
    tau: Option<usize>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true)]
    iterations: Option<usize>,
    #[arg(long = "ucb-c", global = true)]
    ucb_c: Option<f64>,
    /// Re-plan every N macro-steps; also turns on closed-loop `bench`.
    #[arg(long, global = true)]
    replan_interval: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Comma-separated task families, or `all`.
    #[arg(long, global = true)]
    families: Option<String>,
    /// Run benchmark samples in parallel.
    #[arg(long, global = true)]
    parallel: bool,
    #[arg(long, global = true, value_enum)]
    ucb_variant: Option<UcbArg>,
    /// Dataset CSV for `train` (default: <out>/dataset.csv).
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Model JSON for `plan`, `mpc` and `bench` (default: <out>/model.json).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
}

enum Failure {
    Unsat,
    Syntax,
    TooShort,
    Other,
}

impl Failure {
    fn code(self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Unsat => 1,
            Failure::Syntax => 2,
            Failure::TooShort => 3,
            Failure::Other => 4,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command, &cli.flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err((kind, err)) => {
            if !matches!(kind, Failure::Unsat) {
                eprintln!("error: {err:#}");
            }
            kind.code()
        }
    }
}

fn classify(err: anyhow::Error) -> (Failure, anyhow::Error) {
    let kind = match err.downcast_ref::<vfstl_core::Error>() {
        Some(vfstl_core::Error::Parse(_)) => Failure::Syntax,
        Some(vfstl_core::Error::SignalTooShort { .. }) => Failure::TooShort,
        _ => Failure::Other,
    };
    (kind, err)
}

fn run(command: Command, flags: &Flags) -> Result<(), (Failure, anyhow::Error)> {
    if command == Command::Monitor {
        return monitor(flags);
    }
    let cfg = Config::resolve(flags).map_err(classify)?;
    let mut ctx = Ctx {
        cfg: &cfg,
        out: &flags.out,
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    fs::create_dir_all(ctx.out)
        .with_context(|| format!("creating {}", ctx.out.display()))
        .map_err(classify)?;
    let result = match command {
        Command::Collect => collect(&mut ctx),
        Command::Train => train(&mut ctx),
        Command::Plan => plan(&mut ctx),
        Command::Mpc => mpc(&mut ctx),
        Command::Bench => bench(&mut ctx),
        Command::Monitor => unreachable!(),
    };
    result.and_then(|()| ctx.write_manifest(command)).map_err(classify)
}

fn monitor(flags: &Flags) -> Result<(), (Failure, anyhow::Error)> {
    let text = flags
        .formula
        .as_deref()
        .ok_or_else(|| (Failure::Other, anyhow!("monitor needs --formula")))?;
    let formula = parse_formula(text).map_err(|e| (Failure::Syntax, anyhow!(caret(text, &e))))?;
    let path = flags
        .signal
        .as_deref()
        .ok_or_else(|| (Failure::Other, anyhow!("monitor needs --signal")))?;
    let signal = Signal::from_csv_path(path).map_err(|e| classify(e.into()))?;
    let rho = robustness(&signal, &formula, flags.t).map_err(|e| classify(e.into()))?;
    let verdict = if rho > 0.0 {
        "SAT"
    } else if rho < 0.0 {
        "UNSAT"
    } else {
        "BOUNDARY"
    };
    println!("{rho:.9} {verdict}");
    if rho > 0.0 {
        Ok(())
    } else {
        Err((Failure::Unsat, anyhow!("formula not satisfied")))
    }
}

fn caret(text: &str, err: &ParseError) -> String {
    let col = text[..err.position.min(text.len())].chars().count();
    format!("{err}\n  {text}\n  {}^", " ".repeat(col))
}

struct Ctx<'a> {
    cfg: &'a Config,
    out: &'a Path,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl Ctx<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        self.outputs.push(name.to_owned());
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn input(&mut self, configured: Option<&PathBuf>, default: &str) -> PathBuf {
        let path = configured.cloned().unwrap_or_else(|| self.out.join(default));
        self.inputs.push(path.display().to_string());
        path
    }

    fn formula(&self) -> Result<Formula> {
        let text = self.cfg.formula.as_deref().context("a formula is required (--formula)")?;
        parse_formula(text).map_err(|e| anyhow::Error::new(vfstl_core::Error::Parse(e.clone())).context(caret(text, &e)))
    }

    fn model(&mut self) -> Result<DynamicsModel> {
        let path = self.input(self.cfg.model.as_ref(), "model.json");
        let file = File::open(&path).with_context(|| format!("opening model {}", path.display()))?;
        let model = DynamicsModel::read_json(std::io::BufReader::new(file))?;
        let k = self.cfg.world.skills().len();
        if model.k != k {
            return Err(anyhow!("model has {} skills but the world has {k}", model.k));
        }
        Ok(model)
    }

    fn planner(&self, stream: &str) -> PlannerConfig {
        PlannerConfig {
            seed: derive(self.cfg.seed, stream, 0),
            ..self.cfg.planner.clone()
        }
    }

    fn write_manifest(&mut self, command: Command) -> Result<()> {
        let name = format!("{}_manifest.json", command.name());
        let manifest = RunManifest {
            subcommand: command.name(),
            version: env!("CARGO_PKG_VERSION"),
            seed: self.cfg.seed,
            config: self.cfg,
            inputs: self.inputs.clone(),
            outputs: self.outputs.iter().cloned().chain([name.clone()]).collect(),
        };
        let path = self.out.join(&name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

fn collect(ctx: &mut Ctx) -> Result<()> {
    let c = &ctx.cfg.collect;
    let data = collect_transitions(
        &ctx.cfg.world,
        c.episodes,
        c.steps_per_episode,
        derive(ctx.cfg.seed, "collect", 0),
    )?;
    let mut w = ctx.create("dataset.csv")?;
    data.write_csv(&mut w)?;
    w.flush()?;
    eprintln!("collected {} transitions", data.len());
    Ok(())
}

fn train(ctx: &mut Ctx) -> Result<()> {
    let path = ctx.input(ctx.cfg.dataset.as_ref(), "dataset.csv");
    let file = File::open(&path).with_context(|| format!("opening dataset {}", path.display()))?;
    let data = TransitionDataset::read_csv(std::io::BufReader::new(file))?;
    let train_cfg = vfstl_core::vfs::TrainConfig {
        seed: derive(ctx.cfg.seed, "train", 0),
        ..ctx.cfg.train.clone()
    };
    let report = train_dynamics(&data, &train_cfg)?;
    ctx.write_json("train_report.json", &report)?;
    let mut w = ctx.create("model.json")?;
    report.into_model().write_json(&mut w)?;
    w.flush()?;
    Ok(())
}

fn plan(ctx: &mut Ctx) -> Result<()> {
    let formula = ctx.formula()?;
    let model = ctx.model()?;
    let world = &ctx.cfg.world;
    let start = reset_world(world, derive(ctx.cfg.seed, "plan-reset", 0))?;
    let z0 = embed_state(&start.state, &start.world);
    let channels = start.world.channel_names();
    let planner = ctx.planner("planner");
    let problem = Problem::new(&model, &formula, &channels, planner.horizon);
    let plan = match ctx.cfg.planner_kind {
        PlannerKind::Mcts => plan_mcts(&z0, &problem, &planner)?.1,
        PlannerKind::Exhaustive => exhaustive_best(&z0, &problem)?,
    };
    eprintln!("predicted robustness {:.9}", plan.predicted_robustness);
    let doc = json!({
        "formula": formula.to_string(),
        "skills": plan.skills,
        "predicted_robustness": plan.predicted_robustness,
        "z_trajectory": plan.predicted_z_trajectory,
        "start": start.state,
        "seed": ctx.cfg.seed,
        "config": planner,
    });
    ctx.write_json("plan.json", &doc)
}

fn mpc(ctx: &mut Ctx) -> Result<()> {
    let formula = ctx.formula()?;
    let model = ctx.model()?;
    let planner = ctx.planner("planner");
    let run = mpc_run(
        &ctx.cfg.world,
        &model,
        &formula,
        &planner,
        ctx.cfg.planner_kind,
        derive(ctx.cfg.seed, "mpc-reset", 0),
    )?;
    let mut w = ctx.create("trajectory.csv")?;
    write_trajectory_csv(&mut w, &run.states, &run.skills, run.world.tau)?;
    w.flush()?;
    eprintln!(
        "realized value-function robustness {:.9}, ground truth {:.9}",
        run.realized_vfs_robustness, run.ground_truth_robustness
    );
    let doc = json!({
        "formula": formula.to_string(),
        "skills": run.skills,
        "predicted_robustness": run.predicted_robustness(),
        "realized_vfs_robustness": run.realized_vfs_robustness,
        "ground_truth_robustness": run.ground_truth_robustness,
        "z_trajectory": run.executed_z,
        "plans": run.plans,
        "trajectory_csv": "trajectory.csv",
        "seed": ctx.cfg.seed,
        "config": planner,
    });
    ctx.write_json("run.json", &doc)
}

fn bench(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let b = &ctx.cfg.bench;
    let cfg = BenchConfig {
        families: b.families.clone(),
        samples_per_family: b.samples,
        planner: ctx.cfg.planner.clone(),
        mpc: b.mpc,
        seed: ctx.cfg.seed,
        parallel: b.parallel,
    };
    let records = run_benchmark(&ctx.cfg.world, &model, &cfg)?;
    for r in records.iter().filter(|r| r.failed()) {
        eprintln!(
            "sample {} {} failed: {}",
            r.family,
            r.sample,
            r.error.as_deref().unwrap_or_default()
        );
    }
    let mut w = ctx.create("bench.csv")?;
    write_records_csv(&records, &mut w)?;
    w.flush()?;
    let summary = SummaryStats::from_records(&records)?;
    ctx.write_json("summary.json", &summary)?;
    let mut w = ctx.create("boxplot.svg")?;
    write_boxplot_svg(&summary, &mut w)?;
    w.flush()?;
    for f in &summary.families {
        eprintln!(
            "{:<12} value-function q1 {:+.4} success {:.2} | ground truth q1 {:+.4} success {:.2}",
            f.family.name(),
            f.vfs.q1,
            f.vfs.success_rate,
            f.ground_truth.q1,
            f.ground_truth.success_rate
        );
    }
    Ok(())
}
