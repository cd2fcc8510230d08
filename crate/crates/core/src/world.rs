//! Deterministic 2D zone world with one goal-reaching skill per zone color.
//!
//! The arena is the square `[-h, h]²` where `h` is `arena_half_extent`.
//! Eight circular zones, two per color, are either fixed by the
//! configuration or re-sampled on reset. The robot is a unicycle with a
//! bounded turn rate; each skill steers it toward the nearest zone of the
//! skill's color and holds position once inside.

use std::f64::consts::PI;
use std::fmt;
use std::io;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::stl::{Formula, Signal};

const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    R,
    J,
    Y,
    W,
}

impl Color {
    pub const ALL: [Color; 4] = [Color::R, Color::J, Color::Y, Color::W];

    /// Signal channel name for this color.
    pub fn channel(self) -> &'static str {
        match self {
            Color::R => "R",
            Color::J => "J",
            Color::Y => "Y",
            Color::W => "W",
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.channel())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub color: Color,
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl ZoneSpec {
    pub fn new(color: Color, center: [f64; 2], radius: f64) -> Self {
        Self {
            color,
            cx: center[0],
            cy: center[1],
            r: radius,
        }
    }

    pub fn center_distance(&self, pos: [f64; 2]) -> f64 {
        (pos[0] - self.cx).hypot(pos[1] - self.cy)
    }

    /// Strictly inside the open disk.
    pub fn contains(&self, pos: [f64; 2]) -> bool {
        self.center_distance(pos) < self.r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub arena_half_extent: f64,
    /// Distance covered per env step when heading straight at the target.
    pub robot_speed: f64,
    /// Env steps per skill execution.
    pub tau: usize,
    pub seed: u64,
    pub zones: Vec<ZoneSpec>,
    /// Maximum heading change per env step, radians.
    #[serde(default = "default_turn_limit")]
    pub turn_limit: f64,
    /// Re-sample zone centers on every reset instead of using `zones`.
    #[serde(default)]
    pub randomize_zones: bool,
}

fn default_turn_limit() -> f64 {
    PI / 8.0
}

impl Default for WorldConfig {
    /// Desk-scale layout: a 4×4 arena with zones on a 3×3 grid around an
    /// empty center cell, same-colored zones diametrically opposite.
    fn default() -> Self {
        let h = 2.0;
        let r = 0.3;
        let s = 1.5;
        let zones = vec![
            ZoneSpec::new(Color::R, [-s, s], r),
            ZoneSpec::new(Color::J, [0.0, s], r),
            ZoneSpec::new(Color::Y, [s, s], r),
            ZoneSpec::new(Color::W, [s, 0.0], r),
            ZoneSpec::new(Color::R, [s, -s], r),
            ZoneSpec::new(Color::J, [0.0, -s], r),
            ZoneSpec::new(Color::Y, [-s, -s], r),
            ZoneSpec::new(Color::W, [-s, 0.0], r),
        ];
        Self {
            arena_half_extent: h,
            robot_speed: 0.05 * h,
            tau: 40,
            seed: 0,
            zones,
            turn_limit: default_turn_limit(),
            randomize_zones: false,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.arena_half_extent > 0.0 && self.arena_half_extent.is_finite()) {
            return bad(format!("arena_half_extent must be positive, got {}", self.arena_half_extent));
        }
        if !(self.robot_speed > 0.0 && self.robot_speed.is_finite()) {
            return bad(format!("robot_speed must be positive, got {}", self.robot_speed));
        }
        if !(self.turn_limit > 0.0 && self.turn_limit.is_finite()) {
            return bad(format!("turn_limit must be positive, got {}", self.turn_limit));
        }
        if self.zones.len() != 8 {
            return bad(format!("expected 8 zones, got {}", self.zones.len()));
        }
        for color in Color::ALL {
            let n = self.zones.iter().filter(|z| z.color == color).count();
            if n != 2 {
                return bad(format!("expected 2 zones of color {color}, got {n}"));
            }
        }
        let h = self.arena_half_extent;
        for (i, z) in self.zones.iter().enumerate() {
            if !(z.r > 0.0 && z.r.is_finite()) {
                return bad(format!("zone {i} has non-positive radius {}", z.r));
            }
            if !self.randomize_zones && (z.cx.abs() + z.r > h || z.cy.abs() + z.r > h) {
                return bad(format!("zone {i} extends outside the arena"));
            }
            if self.randomize_zones && z.r >= h {
                return bad(format!("zone {i} radius {} does not fit the arena", z.r));
            }
        }
        Ok(())
    }

    /// Largest extent of the arena; the normalizer for distance-based readings.
    pub fn diameter(&self) -> f64 {
        2.0 * self.arena_half_extent
    }

    /// One skill per color, ids in [`Color::ALL`] order.
    pub fn skills(&self) -> Vec<Skill> {
        Color::ALL
            .iter()
            .enumerate()
            .map(|(id, &target_color)| Skill { id, target_color })
            .collect()
    }

    pub fn skill(&self, id: usize) -> Option<Skill> {
        Color::ALL.get(id).map(|&target_color| Skill { id, target_color })
    }

    /// Channel names of the skill colors, in skill-id order.
    pub fn channel_names(&self) -> Vec<String> {
        Color::ALL.iter().map(|c| c.channel().to_owned()).collect()
    }

    pub fn zones_of(&self, color: Color) -> impl Iterator<Item = &ZoneSpec> {
        self.zones.iter().filter(move |z| z.color == color)
    }

    /// Distance from `pos` to the boundary of the nearest zone of `color`,
    /// zero inside.
    pub fn boundary_distance(&self, pos: [f64; 2], color: Color) -> f64 {
        self.zones_of(color)
            .map(|z| (z.center_distance(pos) - z.r).max(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `r - ‖pos - center‖` over zones of `color`; positive iff inside.
    pub fn signed_margin(&self, pos: [f64; 2], color: Color) -> f64 {
        self.zones_of(color)
            .map(|z| z.r - z.center_distance(pos))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inside(&self, pos: [f64; 2], color: Color) -> bool {
        self.zones_of(color).any(|z| z.contains(pos))
    }

    fn nearest_zone(&self, pos: [f64; 2], color: Color) -> &ZoneSpec {
        let mut best: Option<(&ZoneSpec, f64)> = None;
        for z in self.zones_of(color) {
            let d = z.center_distance(pos) - z.r;
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((z, d));
            }
        }
        best.expect("validated config has zones of every color").0
    }

    fn clamp(&self, pos: [f64; 2]) -> [f64; 2] {
        let h = self.arena_half_extent;
        [pos[0].clamp(-h, h), pos[1].clamp(-h, h)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pos: [f64; 2],
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Skill {
    pub id: usize,
    pub target_color: Color,
}

/// Outcome of [`reset_world`]: the concrete layout and the robot's start.
#[derive(Debug, Clone, PartialEq)]
pub struct Reset {
    pub world: WorldConfig,
    pub state: RobotState,
}

/// Place the robot uniformly in the arena outside every zone, re-sampling
/// the zone layout first when the configuration asks for it.
pub fn reset_world(cfg: &WorldConfig, seed: u64) -> Result<Reset> {
    cfg.validate()?;
    let mut rng = seed::rng(seed::derive(seed, "reset", 0));
    let mut world = cfg.clone();
    if cfg.randomize_zones {
        world.zones = sample_layout(cfg, &mut rng)?;
        world.randomize_zones = false;
    }
    let h = world.arena_half_extent;
    for _ in 0..PLACEMENT_ATTEMPTS {
        let pos = [rng.gen_range(-h..=h), rng.gen_range(-h..=h)];
        if world.zones.iter().all(|z| z.center_distance(pos) >= z.r) {
            let heading = rng.gen_range(-PI..PI);
            return Ok(Reset {
                world,
                state: RobotState { pos, heading },
            });
        }
    }
    Err(Error::Placement {
        what: "robot",
        attempts: PLACEMENT_ATTEMPTS,
    })
}

fn sample_layout(cfg: &WorldConfig, rng: &mut impl Rng) -> Result<Vec<ZoneSpec>> {
    let h = cfg.arena_half_extent;
    let mut placed: Vec<ZoneSpec> = Vec::with_capacity(cfg.zones.len());
    for spec in &cfg.zones {
        let lim = h - spec.r;
        let zone = (0..PLACEMENT_ATTEMPTS).find_map(|_| {
            let z = ZoneSpec::new(
                spec.color,
                [rng.gen_range(-lim..=lim), rng.gen_range(-lim..=lim)],
                spec.r,
            );
            placed
                .iter()
                .all(|p| p.center_distance([z.cx, z.cy]) >= p.r + z.r)
                .then_some(z)
        });
        match zone {
            Some(z) => placed.push(z),
            None => {
                return Err(Error::Placement {
                    what: "zone",
                    attempts: PLACEMENT_ATTEMPTS,
                })
            }
        }
    }
    Ok(placed)
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// One env step of the reference pursuit controller.
///
/// Turns toward the nearest zone of the skill's color by at most
/// `turn_limit`, then moves forward by `min(speed, distance)` scaled by the
/// cosine of the remaining heading error (never backwards). Inside a target
/// zone the state is returned unchanged.
pub fn skill_action(state: &RobotState, skill: Skill, world: &WorldConfig) -> RobotState {
    if world.inside(state.pos, skill.target_color) {
        return *state;
    }
    let target = world.nearest_zone(state.pos, skill.target_color);
    let (dx, dy) = (target.cx - state.pos[0], target.cy - state.pos[1]);
    let dist = dx.hypot(dy);
    let desired = dy.atan2(dx);
    let err = wrap_angle(desired - state.heading);
    let heading = wrap_angle(state.heading + err.clamp(-world.turn_limit, world.turn_limit));
    let remaining = wrap_angle(desired - heading);
    let step = world.robot_speed.min(dist) * remaining.cos().max(0.0);
    let pos = world.clamp([
        state.pos[0] + step * heading.cos(),
        state.pos[1] + step * heading.sin(),
    ]);
    RobotState { pos, heading }
}

/// Run `skill` for exactly `world.tau` env steps; the result includes the
/// start state, so it has `tau + 1` entries.
pub fn execute_skill(state: &RobotState, skill: Skill, world: &WorldConfig) -> Vec<RobotState> {
    let mut traj = Vec::with_capacity(world.tau + 1);
    traj.push(*state);
    let mut s = *state;
    for _ in 0..world.tau {
        s = skill_action(&s, skill, world);
        traj.push(s);
    }
    traj
}

/// Final state after running `skill` for `tau` steps.
pub fn skill_outcome(state: &RobotState, skill: Skill, world: &WorldConfig) -> RobotState {
    (0..world.tau).fold(*state, |s, _| skill_action(&s, skill, world))
}

/// Per-color signed distance to the nearest zone boundary, normalized by the
/// arena diameter, sampled every `stride` env steps starting at step 0.
pub fn ground_truth_signal(traj: &[RobotState], world: &WorldConfig, stride: usize) -> Result<Signal> {
    if stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    if traj.is_empty() {
        return Err(Error::Signal("empty trajectory".into()));
    }
    let d = world.diameter();
    Signal::new(Color::ALL.iter().map(|&c| {
        let values = traj
            .iter()
            .step_by(stride)
            .map(|s| world.signed_margin(s.pos, c) / d)
            .collect();
        (c.channel(), values)
    }))
}

/// The same task read against zone membership: every threshold becomes 0,
/// so `R>0.8` on critic readings becomes `R>0` on [`ground_truth_signal`],
/// i.e. "inside a red zone".
pub fn ground_truth_formula(phi: &Formula) -> Formula {
    phi.map_thresholds(&|_| 0.0)
}

/// Write an env-step trajectory as `step,x,y,heading,active_skill`.
///
/// `skills[i]` is the skill that drove steps `i*tau .. (i+1)*tau`; the final
/// state has no active skill.
pub fn write_trajectory_csv<W: io::Write>(
    writer: W,
    traj: &[RobotState],
    skills: &[usize],
    tau: usize,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["step", "x", "y", "heading", "active_skill"])?;
    for (step, s) in traj.iter().enumerate() {
        let active = step
            .checked_div(tau)
            .and_then(|i| skills.get(i))
            .map(|k| k.to_string())
            .unwrap_or_default();
        wtr.write_record([
            step.to_string(),
            s.pos[0].to_string(),
            s.pos[1].to_string(),
            s.heading.to_string(),
            active,
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
