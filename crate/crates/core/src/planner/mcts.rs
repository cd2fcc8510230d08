use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Dynamics, PlanResult, PlannerConfig, Problem, Selection, UcbVariant};
use crate::error::{Error, Result};
use crate::seed;
use crate::vfs::VfsPoint;

#[derive(Debug, Clone)]
pub struct TreeNode<S> {
    pub state: S,
    pub z: VfsPoint,
    /// Macro-steps below the root.
    pub depth: usize,
    pub incoming_skill: Option<usize>,
    pub parent: Option<usize>,
    /// Child node index per skill id, once expanded.
    pub children: Vec<Option<usize>>,
    pub visits: u64,
    /// Sum of rollout rewards backed up through this node.
    pub score: f64,
}

impl<S> TreeNode<S> {
    pub fn is_fully_expanded(&self) -> bool {
        self.children.iter().all(Option::is_some)
    }

    pub fn expanded_children(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children
            .iter()
            .enumerate()
            .filter_map(|(skill, c)| c.map(|c| (skill, c)))
    }
}

/// Arena of nodes; the root is index 0.
#[derive(Debug, Clone)]
pub struct SearchTree<S> {
    pub nodes: Vec<TreeNode<S>>,
    /// Highest rollout reward seen and the full skill sequence behind it;
    /// the earliest one wins ties.
    pub best_rollout: Option<(f64, Vec<usize>)>,
}

impl<S> SearchTree<S> {
    pub fn root(&self) -> &TreeNode<S> {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Skills on the path from the root to `node`.
    pub fn path_skills(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut v = node;
        while let (Some(skill), Some(p)) = (self.nodes[v].incoming_skill, self.nodes[v].parent) {
            out.push(skill);
            v = p;
        }
        out.reverse();
        out
    }

    /// Readings from the root down to `node`, root first.
    pub fn path_readings(&self, node: usize) -> Vec<VfsPoint> {
        let mut out = Vec::new();
        let mut v = Some(node);
        while let Some(i) = v {
            out.push(self.nodes[i].z.clone());
            v = self.nodes[i].parent;
        }
        out.reverse();
        out
    }
}

/// Upper confidence score of `node`; unvisited nodes score `+inf`.
pub fn ucb<S>(tree: &SearchTree<S>, node: usize, c: f64, variant: UcbVariant) -> f64 {
    let n = &tree.nodes[node];
    if n.visits == 0 {
        return f64::INFINITY;
    }
    let parent_visits = n.parent.map_or(n.visits, |p| tree.nodes[p].visits) as f64;
    let visits = n.visits as f64;
    let mean = n.score / visits;
    match variant {
        UcbVariant::Paper => mean + c * parent_visits.sqrt() / visits,
        UcbVariant::Uct => mean + c * (parent_visits.ln() / visits).sqrt(),
    }
}

/// Completes `prefix` with uniformly random skills from `state` to the
/// plan horizon and scores the resulting trajectory.
///
/// `prefix` holds every reading up to and including `state`'s; `depth` is
/// the number of macro-steps already taken below the root. Returns the
/// reward and the full trajectory.
pub fn rollout<D: Dynamics>(
    problem: &Problem<'_, D>,
    state: &D::State,
    depth: usize,
    prefix: Vec<VfsPoint>,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<VfsPoint>)> {
    let (reward, traj, _) = rollout_with_skills(problem, state, depth, prefix, rng)?;
    Ok((reward, traj))
}

fn rollout_with_skills<D: Dynamics>(
    problem: &Problem<'_, D>,
    state: &D::State,
    depth: usize,
    mut prefix: Vec<VfsPoint>,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<VfsPoint>, Vec<usize>)> {
    let k = problem.dynamics.num_skills();
    let mut s = state.clone();
    let mut skills = Vec::with_capacity(problem.remaining().saturating_sub(depth));
    for _ in depth..problem.remaining() {
        let skill = rng.gen_range(0..k);
        s = problem.dynamics.step(&s, skill);
        prefix.push(problem.dynamics.reading(&s));
        skills.push(skill);
    }
    let reward = problem.score(&prefix)?;
    Ok((reward, prefix, skills))
}

/// Runs `cfg.iterations` rounds of selection, expansion, rollout and
/// backpropagation from `root`.
///
/// Selection follows the highest UCB child (lowest skill id on ties) until
/// it meets a node with an unexpanded skill, which is expanded in skill-id
/// order, or a node at the plan horizon.
pub fn build_tree<D: Dynamics>(
    root: &D::State,
    problem: &Problem<'_, D>,
    cfg: &PlannerConfig,
) -> Result<SearchTree<D::State>> {
    problem.validate()?;
    cfg.validate()?;
    let k = problem.dynamics.num_skills();
    if k == 0 {
        return Err(Error::Planner("no skills to plan with".into()));
    }
    let remaining = problem.remaining();
    let mut rng = seed::rng(cfg.seed);
    let mut tree = SearchTree {
        nodes: vec![TreeNode {
            z: problem.dynamics.reading(root),
            state: root.clone(),
            depth: 0,
            incoming_skill: None,
            parent: None,
            children: vec![None; k],
            visits: 0,
            score: 0.0,
        }],
        best_rollout: None,
    };

    for _ in 0..cfg.iterations {
        let leaf = select_and_expand(&mut tree, problem, cfg, remaining);
        let mut prefix = problem.history.to_vec();
        prefix.extend(tree.path_readings(leaf));
        let node = &tree.nodes[leaf];
        let (reward, _, tail) = rollout_with_skills(problem, &node.state, node.depth, prefix, &mut rng)?;
        if tree.best_rollout.as_ref().is_none_or(|(b, _)| reward > *b) {
            let mut skills = tree.path_skills(leaf);
            skills.extend(tail);
            tree.best_rollout = Some((reward, skills));
        }
        backpropagate(&mut tree, leaf, reward);
    }
    Ok(tree)
}

fn select_and_expand<D: Dynamics>(
    tree: &mut SearchTree<D::State>,
    problem: &Problem<'_, D>,
    cfg: &PlannerConfig,
    remaining: usize,
) -> usize {
    let mut v = 0;
    loop {
        let node = &tree.nodes[v];
        if node.depth >= remaining {
            return v;
        }
        if let Some(skill) = node.children.iter().position(Option::is_none) {
            let state = problem.dynamics.step(&node.state, skill);
            let child = TreeNode {
                z: problem.dynamics.reading(&state),
                state,
                depth: node.depth + 1,
                incoming_skill: Some(skill),
                parent: Some(v),
                children: vec![None; node.children.len()],
                visits: 0,
                score: 0.0,
            };
            let idx = tree.nodes.len();
            tree.nodes.push(child);
            tree.nodes[v].children[skill] = Some(idx);
            return idx;
        }
        let mut best = None;
        let mut best_score = f64::NEG_INFINITY;
        for (_, c) in node.expanded_children() {
            let u = ucb(tree, c, cfg.exploration, cfg.ucb_variant);
            if best.is_none() || u > best_score {
                best = Some(c);
                best_score = u;
            }
        }
        v = best.expect("fully expanded node has children");
    }
}

fn backpropagate<S>(tree: &mut SearchTree<S>, leaf: usize, reward: f64) {
    let mut v = Some(leaf);
    while let Some(i) = v {
        let n = &mut tree.nodes[i];
        n.visits += 1;
        n.score += reward;
        v = n.parent;
    }
}

/// Skill sequence along the highest-score children from the root, lowest
/// skill id on ties. The path stops where the tree does, so it may be
/// shorter than the plan.
pub fn optimal_policy<S>(tree: &SearchTree<S>) -> Result<Vec<usize>> {
    descend(tree, |n| n.score)
}

/// Like [`optimal_policy`] but ranks children by mean score. Summed scores
/// favor rarely visited children whenever rewards are negative.
pub fn mean_policy<S>(tree: &SearchTree<S>) -> Result<Vec<usize>> {
    descend(tree, |n| if n.visits == 0 { f64::NEG_INFINITY } else { n.score / n.visits as f64 })
}

fn descend<S>(tree: &SearchTree<S>, key: impl Fn(&TreeNode<S>) -> f64) -> Result<Vec<usize>> {
    if tree.is_empty() || tree.root().expanded_children().next().is_none() {
        return Err(Error::Planner("search tree root has no children".into()));
    }
    let mut skills = Vec::new();
    let mut v = 0;
    loop {
        let mut best: Option<(usize, usize)> = None;
        for (skill, c) in tree.nodes[v].expanded_children() {
            if best.is_none_or(|(_, b)| key(&tree.nodes[c]) > key(&tree.nodes[b])) {
                best = Some((skill, c));
            }
        }
        match best {
            Some((skill, c)) => {
                skills.push(skill);
                v = c;
            }
            None => return Ok(skills),
        }
    }
}

/// Builds a tree, reads a plan off it according to `cfg.selection` and
/// scores the plan under the model. A tree path shorter than the remaining
/// horizon is completed by repeating its last skill.
pub fn plan_mcts<D: Dynamics>(
    root: &D::State,
    problem: &Problem<'_, D>,
    cfg: &PlannerConfig,
) -> Result<(SearchTree<D::State>, PlanResult)> {
    let tree = build_tree(root, problem, cfg)?;
    let remaining = problem.remaining();
    let mut skills = if remaining == 0 {
        Vec::new()
    } else {
        match cfg.selection {
            Selection::Score => optimal_policy(&tree)?,
            Selection::Mean => mean_policy(&tree)?,
            Selection::BestRollout => tree.best_rollout.clone().map(|(_, s)| s).unwrap_or_default(),
        }
    };
    if let Some(&last) = skills.last() {
        skills.resize(remaining, last);
    }
    let plan = PlanResult::from_skills(problem, root, skills)?;
    Ok((tree, plan))
}

/// Seed for the search that starts at macro-step `t` of a run.
pub(crate) fn replan_seed(cfg: &PlannerConfig, t: usize) -> u64 {
    seed::derive(cfg.seed, "replan", t as u64)
}

#[cfg(test)]
mod tests {
    use super::super::testing::{names, Toy};
    use super::super::exhaustive_best;
    use super::*;
    use crate::stl::parse_formula;

    fn toy_problem<'a>(toy: &'a Toy, f: &'a crate::stl::Formula, names: &'a [String], t: usize) -> Problem<'a, Toy> {
        Problem::new(toy, f, names, t)
    }

    #[test]
    fn ucb_known_value() {
        let mk = |parent, visits, score| TreeNode {
            state: (),
            z: VfsPoint::new(vec![]).unwrap(),
            depth: 0,
            incoming_skill: None,
            parent,
            children: vec![],
            visits,
            score,
        };
        let tree = SearchTree {
            nodes: vec![mk(None, 4, 0.0), mk(Some(0), 2, 1.0), mk(Some(0), 0, 0.0)],
            best_rollout: None,
        };
        // 1/2 + 1 * sqrt(4) / 2
        assert_eq!(ucb(&tree, 1, 1.0, UcbVariant::Paper), 1.5);
        let uct = 0.5 + (4f64.ln() / 2.0).sqrt();
        assert!((ucb(&tree, 1, 1.0, UcbVariant::Uct) - uct).abs() < 1e-15);
        assert_eq!(ucb(&tree, 2, 1.0, UcbVariant::Paper), f64::INFINITY);
    }

    #[test]
    fn visit_counts_are_consistent() {
        let toy = Toy { k: 3, decay: 0.8 };
        let n = names(3);
        let f = parse_formula("F[0,3] (A>0.7 & B>0.3)").unwrap();
        let p = toy_problem(&toy, &f, &n, 4);
        let cfg = PlannerConfig { iterations: 300, horizon: 4, ..Default::default() };
        let z0 = VfsPoint::new(vec![0.1, 0.2, 0.3]).unwrap();
        let tree = build_tree(&z0, &p, &cfg).unwrap();
        assert_eq!(tree.root().visits, 300);
        // the root is never a rollout leaf itself
        let root_sum: u64 = tree.root().expanded_children().map(|(_, c)| tree.nodes[c].visits).sum();
        assert_eq!(root_sum, 300);
        for node in &tree.nodes[1..] {
            assert!(node.depth <= 4);
            let child_sum: u64 = node.expanded_children().map(|(_, c)| tree.nodes[c].visits).sum();
            if node.depth < 4 && node.expanded_children().next().is_some() {
                assert_eq!(node.visits, 1 + child_sum);
            } else {
                assert_eq!(child_sum, 0);
            }
        }
    }

    #[test]
    fn empty_root_is_an_error() {
        let tree: SearchTree<()> = SearchTree {
            nodes: vec![TreeNode {
                state: (),
                z: VfsPoint::new(vec![0.0]).unwrap(),
                depth: 0,
                incoming_skill: None,
                parent: None,
                children: vec![None],
                visits: 0,
                score: 0.0,
            }],
            best_rollout: None,
        };
        assert!(optimal_policy(&tree).is_err());
        assert!(mean_policy(&tree).is_err());
    }

    #[test]
    fn rollout_mean_matches_enumeration() {
        let toy = Toy { k: 2, decay: 0.7 };
        let n = names(2);
        let f = parse_formula("F[0,3] A>0.6 & G[0,3] B>0.05").unwrap();
        let p = toy_problem(&toy, &f, &n, 3);
        let z0 = VfsPoint::new(vec![0.2, 0.4]).unwrap();

        let mut rewards = Vec::new();
        for seq in 0..8usize {
            let skills: Vec<usize> = (0..3).map(|i| (seq >> (2 - i)) & 1).collect();
            rewards.push(p.score(&p.simulate(&z0, &skills)).unwrap());
        }
        let mean = rewards.iter().sum::<f64>() / 8.0;
        let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 8.0;

        let draws = 20_000;
        let mut rng = seed::rng(5);
        let mut total = 0.0;
        for _ in 0..draws {
            let (r, traj) = rollout(&p, &z0, 0, vec![z0.clone()], &mut rng).unwrap();
            assert_eq!(traj.len(), 4);
            total += r;
        }
        let est = total / draws as f64;
        assert!((est - mean).abs() <= 3.0 * (var / draws as f64).sqrt() + 1e-12);
    }

    #[test]
    fn finds_exhaustive_optimum_on_toy() {
        let toy = Toy { k: 3, decay: 0.6 };
        let n = names(3);
        let f = parse_formula("F[0,1] A>0.6 & F[2,4] C>0.7").unwrap();
        let p = toy_problem(&toy, &f, &n, 4);
        let z0 = VfsPoint::new(vec![0.3, 0.3, 0.3]).unwrap();
        let best = exhaustive_best(&z0, &p).unwrap();
        let cfg = PlannerConfig { iterations: 3000, horizon: 4, ..Default::default() };
        let (_, plan) = plan_mcts(&z0, &p, &cfg).unwrap();
        assert!((plan.predicted_robustness - best.predicted_robustness).abs() <= 1e-9);
    }

    #[test]
    fn selection_rules() {
        let toy = Toy { k: 3, decay: 0.6 };
        let n = names(3);
        let f = parse_formula("F[0,1] A>0.6 & F[2,4] C>0.7").unwrap();
        let p = toy_problem(&toy, &f, &n, 4);
        let z0 = VfsPoint::new(vec![0.3, 0.3, 0.3]).unwrap();
        let cfg = PlannerConfig { iterations: 400, horizon: 4, ..Default::default() };
        let tree = build_tree(&z0, &p, &cfg).unwrap();
        let (best, skills) = tree.best_rollout.clone().unwrap();
        assert_eq!(skills.len(), 4);
        assert_eq!(p.score(&p.simulate(&z0, &skills)).unwrap(), best);
        for (sel, expect) in [
            (Selection::Score, optimal_policy(&tree).unwrap()),
            (Selection::Mean, mean_policy(&tree).unwrap()),
            (Selection::BestRollout, skills),
        ] {
            let (_, plan) = plan_mcts(&z0, &p, &PlannerConfig { selection: sel, ..cfg.clone() }).unwrap();
            assert_eq!(plan.skills[..expect.len()], expect[..], "{sel:?}");
        }
    }

    #[test]
    fn score_policy_follows_largest_sum() {
        let mk = |parent: Option<usize>, skill: Option<usize>, visits: u64, score: f64| TreeNode {
            state: (),
            z: VfsPoint::new(vec![]).unwrap(),
            depth: usize::from(parent.is_some()),
            incoming_skill: skill,
            parent,
            children: vec![None, None],
            visits,
            score,
        };
        let mut tree = SearchTree {
            nodes: vec![
                mk(None, None, 5, -1.0),
                mk(Some(0), Some(0), 4, -0.8),
                mk(Some(0), Some(1), 1, -0.3),
            ],
            best_rollout: None,
        };
        tree.nodes[0].children = vec![Some(1), Some(2)];
        // sums favor the rarely visited child, means the frequent one
        assert_eq!(optimal_policy(&tree).unwrap(), vec![1]);
        assert_eq!(mean_policy(&tree).unwrap(), vec![0]);
        tree.nodes[2].score = -0.8;
        assert_eq!(optimal_policy(&tree).unwrap(), vec![0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let toy = Toy { k: 3, decay: 0.9 };
        let n = names(3);
        let f = parse_formula("G[0,2] B<0.9 U[0,3] A>0.8").unwrap();
        let p = toy_problem(&toy, &f, &n, 5);
        let z0 = VfsPoint::new(vec![0.1, 0.5, 0.9]).unwrap();
        let cfg = PlannerConfig { iterations: 200, horizon: 5, seed: 42, ..Default::default() };
        let (t1, a) = plan_mcts(&z0, &p, &cfg).unwrap();
        let (t2, b) = plan_mcts(&z0, &p, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(t1.len(), t2.len());
    }

    #[test]
    fn short_path_is_extended_with_last_skill() {
        // a single iteration expands one root child and nothing more
        let toy = Toy { k: 2, decay: 0.9 };
        let n = names(2);
        let f = parse_formula("A>0").unwrap();
        let p = toy_problem(&toy, &f, &n, 3);
        let z0 = VfsPoint::new(vec![0.5, 0.5]).unwrap();
        let cfg = PlannerConfig {
            iterations: 1,
            horizon: 3,
            selection: Selection::Score,
            ..Default::default()
        };
        let (tree, plan) = plan_mcts(&z0, &p, &cfg).unwrap();
        assert_eq!(tree.len(), 2);
        assert_eq!(tree.root().visits, 1);
        assert_eq!(plan.skills, vec![0, 0, 0]);
        assert_eq!(plan.predicted_z_trajectory.len(), 4);
    }

    #[test]
    fn predicted_robustness_is_recomputable() {
        let toy = Toy { k: 2, decay: 0.8 };
        let n = names(2);
        let f = parse_formula("F[0,2] (A>0.5 & F[0,1] B>0.5)").unwrap();
        let history = vec![VfsPoint::new(vec![0.0, 0.0]).unwrap()];
        let p = toy_problem(&toy, &f, &n, 4).with_history(&history);
        let z0 = VfsPoint::new(vec![0.3, 0.2]).unwrap();
        let cfg = PlannerConfig { iterations: 500, horizon: 4, ..Default::default() };
        let (_, plan) = plan_mcts(&z0, &p, &cfg).unwrap();
        assert_eq!(plan.start, 1);
        assert_eq!(plan.skills.len(), 3);
        assert_eq!(plan.predicted_z_trajectory.len(), 5);
        let sig = super::super::z_signal(&plan.predicted_z_trajectory, &n).unwrap();
        assert_eq!(crate::stl::robustness(&sig, &f, 0).unwrap(), plan.predicted_robustness);
    }
}
