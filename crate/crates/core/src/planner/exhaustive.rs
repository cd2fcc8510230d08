use super::{Dynamics, PlanResult, Problem, EXHAUSTIVE_BUDGET};
use crate::error::{Error, Result};
use crate::vfs::VfsPoint;

/// Scores every skill sequence for the remaining horizon and returns the
/// best; among equal scores the lexicographically smallest sequence wins.
///
/// Refuses to run when more than [`EXHAUSTIVE_BUDGET`] sequences exist.
pub fn exhaustive_best<D: Dynamics>(root: &D::State, problem: &Problem<'_, D>) -> Result<PlanResult> {
    problem.validate()?;
    let k = problem.dynamics.num_skills();
    let remaining = problem.remaining();
    let sequences = (k as f64).powi(remaining as i32);
    if sequences > EXHAUSTIVE_BUDGET as f64 {
        return Err(Error::Budget {
            sequences,
            budget: EXHAUSTIVE_BUDGET,
        });
    }
    if k == 0 && remaining > 0 {
        return Err(Error::Planner("no skills to plan with".into()));
    }

    let mut search = Search {
        problem,
        traj: problem.history.to_vec(),
        skills: Vec::with_capacity(remaining),
        best: None,
    };
    search.traj.push(problem.dynamics.reading(root));
    search.visit(root, remaining)?;
    let (skills, _) = search.best.expect("at least one sequence");
    PlanResult::from_skills(problem, root, skills)
}

struct Search<'p, 'a, D: Dynamics> {
    problem: &'p Problem<'a, D>,
    traj: Vec<VfsPoint>,
    skills: Vec<usize>,
    best: Option<(Vec<usize>, f64)>,
}

impl<D: Dynamics> Search<'_, '_, D> {
    fn visit(&mut self, state: &D::State, left: usize) -> Result<()> {
        if left == 0 {
            let r = self.problem.score(&self.traj)?;
            if self.best.as_ref().is_none_or(|(_, b)| r > *b) {
                self.best = Some((self.skills.clone(), r));
            }
            return Ok(());
        }
        for skill in 0..self.problem.dynamics.num_skills() {
            let next = self.problem.dynamics.step(state, skill);
            self.traj.push(self.problem.dynamics.reading(&next));
            self.skills.push(skill);
            self.visit(&next, left - 1)?;
            self.skills.pop();
            self.traj.pop();
        }
        Ok(())
    }
}
