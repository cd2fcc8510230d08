use std::io;

use rand::Rng;
use rayon::prelude::*;

use super::{embed_state, VfsPoint};
use crate::error::{Error, Result};
use crate::seed;
use crate::world::{reset_world, skill_outcome, WorldConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub z: VfsPoint,
    pub skill: usize,
    pub z_next: VfsPoint,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionDataset {
    pub records: Vec<TransitionRecord>,
}

impl TransitionDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Dimension of the value-function space, if any record exists.
    pub fn dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.z.dim())
    }

    /// Columns `z0..z{k-1}, skill, zn0..zn{k-1}`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let k = self.dim().unwrap_or(0);
        let mut wtr = csv::Writer::from_writer(writer);
        let header: Vec<String> = (0..k)
            .map(|i| format!("z{i}"))
            .chain(std::iter::once("skill".to_owned()))
            .chain((0..k).map(|i| format!("zn{i}")))
            .collect();
        wtr.write_record(&header)?;
        for r in &self.records {
            let row: Vec<String> = r
                .z
                .as_slice()
                .iter()
                .map(f64::to_string)
                .chain(std::iter::once(r.skill.to_string()))
                .chain(r.z_next.as_slice().iter().map(f64::to_string))
                .collect();
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let width = header.len();
        if width < 3 || width % 2 == 0 {
            return Err(Error::Signal(format!("dataset header has {width} columns")));
        }
        let k = (width - 1) / 2;
        if &header[k] != "skill" {
            return Err(Error::Signal(format!("expected column {k} to be 'skill'")));
        }
        let mut records = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Signal(format!("row {}: bad value '{}'", row + 1, &rec[i])))
            };
            let z = VfsPoint::new((0..k).map(num).collect::<Result<_>>()?)?;
            let skill: usize = rec[k]
                .trim()
                .parse()
                .map_err(|_| Error::Signal(format!("row {}: bad skill '{}'", row + 1, &rec[k])))?;
            if skill >= k {
                return Err(Error::Signal(format!("row {}: skill {skill} out of range", row + 1)));
            }
            let z_next = VfsPoint::new((k + 1..width).map(num).collect::<Result<_>>()?)?;
            records.push(TransitionRecord { z, skill, z_next });
        }
        Ok(Self { records })
    }
}

/// Random skill executions from fresh resets.
///
/// Each episode resets the world with a seed derived from `seed` and the
/// episode index, then runs `steps_per_episode / tau` uniformly chosen
/// skills, recording the embedding before and after each one. Episodes run
/// in parallel; the output order is by episode regardless.
pub fn collect_transitions(
    world: &WorldConfig,
    episodes: usize,
    steps_per_episode: usize,
    seed: u64,
) -> Result<TransitionDataset> {
    world.validate()?;
    if world.tau == 0 {
        return Err(Error::Config("tau must be positive to collect transitions".into()));
    }
    if !steps_per_episode.is_multiple_of(world.tau) {
        return Err(Error::Config(format!(
            "steps_per_episode {steps_per_episode} is not a multiple of tau {}",
            world.tau
        )));
    }
    let macro_steps = steps_per_episode / world.tau;
    let skills = world.skills();
    let per_episode: Vec<Vec<TransitionRecord>> = (0..episodes as u64)
        .into_par_iter()
        .map(|e| {
            let reset = reset_world(world, seed::derive(seed, "episode", e))?;
            let mut rng = seed::rng(seed::derive(seed, "skill-choice", e));
            let mut state = reset.state;
            let mut z = embed_state(&state, &reset.world);
            let mut out = Vec::with_capacity(macro_steps);
            for _ in 0..macro_steps {
                let skill = skills[rng.gen_range(0..skills.len())];
                state = skill_outcome(&state, skill, &reset.world);
                let z_next = embed_state(&state, &reset.world);
                out.push(TransitionRecord {
                    z: z.clone(),
                    skill: skill.id,
                    z_next: z_next.clone(),
                });
                z = z_next;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(TransitionDataset {
        records: per_episode.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_macro_steps() {
        let w = WorldConfig::default();
        let d = collect_transitions(&w, 1, 5 * w.tau, 3).unwrap();
        assert_eq!(d.len(), 5);
        let d = collect_transitions(&w, 7, 3 * w.tau, 3).unwrap();
        assert_eq!(d.len(), 21);
    }

    #[test]
    fn rejects_partial_macro_steps() {
        let w = WorldConfig::default();
        assert!(collect_transitions(&w, 1, w.tau + 1, 0).is_err());
    }

    #[test]
    fn reproducible_and_in_range() {
        let w = WorldConfig::default();
        let a = collect_transitions(&w, 20, 4 * w.tau, 11).unwrap();
        assert_eq!(a, collect_transitions(&w, 20, 4 * w.tau, 11).unwrap());
        assert_ne!(a, collect_transitions(&w, 20, 4 * w.tau, 12).unwrap());
        for r in &a.records {
            assert!(r.skill < 4);
            for v in r.z.as_slice().iter().chain(r.z_next.as_slice()) {
                assert!((0.0..=1.0).contains(v));
            }
        }
        // consecutive records within an episode chain
        assert_eq!(a.records[0].z_next, a.records[1].z);
    }

    #[test]
    fn csv_round_trip() {
        let w = WorldConfig::default();
        let a = collect_transitions(&w, 3, 2 * w.tau, 1).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("z0,z1,z2,z3,skill,zn0,zn1,zn2,zn3\n"));
        assert_eq!(TransitionDataset::read_csv(buf.as_slice()).unwrap(), a);
    }
}
