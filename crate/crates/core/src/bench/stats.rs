use serde::{Deserialize, Serialize};

use super::{BenchRecord, TaskFamily};
use crate::error::{Error, Result};

/// `p`-quantile by linear interpolation between order statistics at
/// position `p * (n - 1)` (the default of most numeric libraries).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(q1, median, q3)` of a non-empty sample.
pub fn quartiles(values: &[f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some((quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub success_rate: f64,
}

impl SpaceStats {
    fn of(values: &[f64]) -> Option<Self> {
        let (q1, median, q3) = quartiles(values)?;
        Some(Self {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            q1,
            median,
            q3,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            success_rate: values.iter().filter(|&&v| v > 0.0).count() as f64 / values.len() as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub family: TaskFamily,
    pub samples: usize,
    pub failed: usize,
    /// Realized value-function robustness.
    pub vfs: SpaceStats,
    /// Robustness the planner predicted.
    pub predicted: SpaceStats,
    pub ground_truth: SpaceStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub families: Vec<FamilySummary>,
}

impl SummaryStats {
    /// Per-family statistics over the samples that ran. Fails if some
    /// family present in `records` has no successful run.
    pub fn from_records(records: &[BenchRecord]) -> Result<Self> {
        let mut families: Vec<TaskFamily> = records.iter().map(|r| r.family).collect();
        families.sort();
        families.dedup();
        let families = families
            .into_iter()
            .map(|family| {
                let of_family: Vec<&BenchRecord> = records.iter().filter(|r| r.family == family).collect();
                let ok: Vec<&BenchRecord> = of_family.iter().copied().filter(|r| !r.failed()).collect();
                let col = |f: fn(&BenchRecord) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
                let none = || Error::Config(format!("no completed samples for {family}"));
                Ok(FamilySummary {
                    family,
                    samples: of_family.len(),
                    failed: of_family.len() - ok.len(),
                    vfs: SpaceStats::of(&col(|r| r.vfs_robustness)).ok_or_else(none)?,
                    predicted: SpaceStats::of(&col(|r| r.predicted_robustness)).ok_or_else(none)?,
                    ground_truth: SpaceStats::of(&col(|r| r.gt_robustness)).ok_or_else(none)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { families })
    }

    pub fn family(&self, family: TaskFamily) -> Option<&FamilySummary> {
        self.families.iter().find(|f| f.family == family)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartile_convention() {
        assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0]), Some((1.75, 2.5, 3.25)));
        assert_eq!(quartiles(&[0.3]), Some((0.3, 0.3, 0.3)));
        assert_eq!(quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]), Some((2.0, 3.0, 4.0)));
        assert_eq!(quartiles(&[]), None);
    }

    fn rec(family: TaskFamily, sample: usize, v: f64, g: f64) -> BenchRecord {
        BenchRecord {
            family,
            sample,
            seed: 0,
            formula: String::new(),
            vfs_robustness: v,
            predicted_robustness: v,
            gt_robustness: g,
            error: None,
        }
    }

    #[test]
    fn summary_counts() {
        let mut records = vec![
            rec(TaskFamily::Stability, 0, 0.1, -0.1),
            rec(TaskFamily::Stability, 1, 0.2, 0.0),
            rec(TaskFamily::Stability, 2, -0.3, 0.1),
            rec(TaskFamily::Sequencing, 0, 0.5, 0.5),
        ];
        records.push(BenchRecord {
            error: Some("x".into()),
            ..rec(TaskFamily::Stability, 3, f64::NAN, f64::NAN)
        });
        let s = SummaryStats::from_records(&records).unwrap();
        let st = s.family(TaskFamily::Stability).unwrap();
        assert_eq!((st.samples, st.failed), (4, 1));
        assert!((st.vfs.success_rate - 2.0 / 3.0).abs() < 1e-15);
        assert!((st.ground_truth.success_rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(st.vfs.min, -0.3);
        assert_eq!(st.vfs.median, 0.1);
        assert!(st.vfs.q1 <= st.vfs.median && st.vfs.median <= st.vfs.q3);
        assert!(s.family(TaskFamily::ReachAvoid).is_none());
    }

    #[test]
    fn family_without_completed_samples() {
        let r = BenchRecord {
            error: Some("x".into()),
            ..rec(TaskFamily::Stability, 0, f64::NAN, f64::NAN)
        };
        assert!(SummaryStats::from_records(&[r]).is_err());
    }
}
