//! Tabular gridworld with a once-only binary goal reward and no discount.
//!
//! Used to check numerically that the optimal value of such a problem is
//! the probability of eventually reaching a goal: [`value_iteration`]
//! computes the former by Bellman backups, [`reach_probability`] the latter
//! by solving the absorption equations of the Markov chain induced by the
//! greedy policy.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Stay];

    fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (0, 1),
            Action::Down => (0, -1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
            Action::Stay => (0, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Free,
    Wall,
    Goal,
    /// Absorbing, never rewarded.
    Pit,
}

/// Gridworld MDP. With probability `1 - slip` the chosen move happens; with
/// probability `slip` one of the other four actions happens instead, chosen
/// uniformly. Moves into walls or off the grid leave the agent in place.
/// Goal and pit cells are absorbing.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMdp {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Cell>,
    pub slip: f64,
}

impl GridMdp {
    pub fn new(width: usize, height: usize, slip: f64) -> Self {
        assert!((0.0..=1.0).contains(&slip), "slip must be a probability");
        Self {
            width,
            height,
            cells: vec![Cell::Free; width * height],
            slip,
        }
    }

    /// Random layout: about 10% walls, one to three goals, up to four pits.
    pub fn random(width: usize, height: usize, slip: f64, rng: &mut impl Rng) -> Self {
        let mut mdp = Self::new(width, height, slip);
        let n = width * height;
        for c in mdp.cells.iter_mut() {
            if rng.gen_bool(0.1) {
                *c = Cell::Wall;
            }
        }
        let goals = rng.gen_range(1..=3);
        let pits = rng.gen_range(0..=4);
        for (kind, count) in [(Cell::Goal, goals), (Cell::Pit, pits)] {
            for _ in 0..count {
                let i = rng.gen_range(0..n);
                mdp.cells[i] = kind;
            }
        }
        mdp
    }

    pub fn set(&mut self, x: usize, y: usize, cell: Cell) {
        self.cells[y * self.width + x] = cell;
    }

    pub fn cell(&self, s: usize) -> Cell {
        self.cells[s]
    }

    pub fn num_states(&self) -> usize {
        self.cells.len()
    }

    fn is_absorbing(&self, s: usize) -> bool {
        matches!(self.cells[s], Cell::Goal | Cell::Pit | Cell::Wall)
    }

    fn moved(&self, s: usize, a: Action) -> usize {
        let (x, y) = ((s % self.width) as isize, (s / self.width) as isize);
        let (dx, dy) = a.delta();
        let (nx, ny) = (x + dx, y + dy);
        if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
            return s;
        }
        let t = ny as usize * self.width + nx as usize;
        if self.cells[t] == Cell::Wall {
            s
        } else {
            t
        }
    }

    /// Successor distribution `(state, probability)` for taking `a` in `s`;
    /// entries may repeat a state.
    pub fn transitions(&self, s: usize, a: Action) -> Vec<(usize, f64)> {
        if self.is_absorbing(s) {
            return vec![(s, 1.0)];
        }
        let mut out = vec![(self.moved(s, a), 1.0 - self.slip)];
        if self.slip > 0.0 {
            for other in Action::ALL.iter().filter(|&&o| o != a) {
                out.push((self.moved(s, *other), self.slip / 4.0));
            }
        }
        out
    }

    fn q_value(&self, values: &[f64], s: usize, a: Action) -> f64 {
        self.transitions(s, a).iter().map(|&(t, p)| p * values[t]).sum()
    }
}

/// Optimal values by synchronous Bellman backups, iterated until the
/// largest change in a sweep is below `tolerance`.
///
/// Entering a goal pays 1 once; the value of a goal cell is fixed at 1 and
/// every other cell starts at 0, so the iterates rise monotonically toward
/// the optimum.
pub fn value_iteration(mdp: &GridMdp, tolerance: f64) -> Vec<f64> {
    let mut v: Vec<f64> = mdp
        .cells
        .iter()
        .map(|c| if *c == Cell::Goal { 1.0 } else { 0.0 })
        .collect();
    loop {
        let mut next = v.clone();
        let mut change: f64 = 0.0;
        for s in 0..mdp.num_states() {
            if mdp.is_absorbing(s) {
                continue;
            }
            let best = Action::ALL
                .iter()
                .map(|&a| mdp.q_value(&v, s, a))
                .fold(f64::NEG_INFINITY, f64::max);
            change = change.max((best - v[s]).abs());
            next[s] = best;
        }
        v = next;
        if change < tolerance {
            return v;
        }
    }
}

/// Greedy policy with respect to `values` that also makes progress.
///
/// With no discount, "stay" and back-and-forth moves can tie with genuinely
/// optimal actions. Among actions within `1e-9` of the best Q-value, each
/// state picks one that can move it strictly closer (in a breadth-first
/// ranking from the goals) to a goal.
pub fn greedy_policy(mdp: &GridMdp, values: &[f64]) -> Vec<Action> {
    const TIE: f64 = 1e-9;
    let n = mdp.num_states();
    let optimal: Vec<Vec<Action>> = (0..n)
        .map(|s| {
            let q: Vec<f64> = Action::ALL.iter().map(|&a| mdp.q_value(values, s, a)).collect();
            let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Action::ALL
                .iter()
                .zip(&q)
                .filter(|(_, &qa)| qa >= best - TIE)
                .map(|(a, _)| *a)
                .collect()
        })
        .collect();

    let mut policy: Vec<Option<Action>> = vec![None; n];
    let mut ranked = vec![false; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        if mdp.cell(s) == Cell::Goal {
            ranked[s] = true;
            policy[s] = Some(Action::Stay);
            queue.push_back(s);
        }
    }
    // Layered sweep: a state joins once one of its optimal actions reaches
    // an already ranked state with positive probability.
    while !queue.is_empty() {
        let layer: Vec<usize> = queue.drain(..).collect();
        let mut added = Vec::new();
        for s in 0..n {
            if ranked[s] || mdp.is_absorbing(s) || values[s] <= 0.0 {
                continue;
            }
            let pick = optimal[s].iter().find(|&&a| {
                mdp.transitions(s, a)
                    .iter()
                    .any(|&(t, p)| p > 0.0 && t != s && layer.contains(&t))
            });
            if let Some(&a) = pick {
                policy[s] = Some(a);
                added.push(s);
            }
        }
        for &s in &added {
            ranked[s] = true;
            queue.push_back(s);
        }
    }
    policy
        .into_iter()
        .enumerate()
        .map(|(s, p)| p.unwrap_or(optimal[s][0]))
        .collect()
}

/// Exact probability of eventually entering a goal under `policy`.
///
/// States that cannot reach a goal in the policy's transition graph get 0;
/// for the rest the absorption equations `p = P p` (with `p = 1` on goals)
/// form a nonsingular linear system, solved by LU decomposition.
pub fn reach_probability(mdp: &GridMdp, policy: &[Action]) -> Vec<f64> {
    let n = mdp.num_states();
    let succ: Vec<Vec<(usize, f64)>> = (0..n).map(|s| mdp.transitions(s, policy[s])).collect();

    let mut can_reach = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&s| mdp.cell(s) == Cell::Goal).collect();
    for &s in &stack {
        can_reach[s] = true;
    }
    while let Some(t) = stack.pop() {
        for s in 0..n {
            if !can_reach[s] && succ[s].iter().any(|&(u, p)| u == t && p > 0.0) {
                can_reach[s] = true;
                stack.push(s);
            }
        }
    }

    let unknown: Vec<usize> = (0..n)
        .filter(|&s| can_reach[s] && mdp.cell(s) != Cell::Goal)
        .collect();
    let mut p: Vec<f64> = (0..n)
        .map(|s| if mdp.cell(s) == Cell::Goal { 1.0 } else { 0.0 })
        .collect();
    if unknown.is_empty() {
        return p;
    }
    let mut index = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        index[s] = i;
    }
    let m = unknown.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (i, &s) in unknown.iter().enumerate() {
        for &(t, prob) in &succ[s] {
            if mdp.cell(t) == Cell::Goal {
                b[i] += prob;
            } else if index[t] != usize::MAX {
                a[(i, index[t])] -= prob;
            }
        }
    }
    let x = a
        .lu()
        .solve(&b)
        .expect("absorption system is nonsingular on goal-reaching states");
    for (i, &s) in unknown.iter().enumerate() {
        p[s] = x[i];
    }
    p
}
