//! Position-based effectiveness metrics.
//!
//! Positions are 1-based counts of patch executions up to and including the
//! first desired patch. Bugs where either schedule never reaches the target
//! are excluded from aggregates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scheduler::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Plausible,
    Correct,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Plausible => "plausible",
            Target::Correct => "correct",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn first_position(schedule: &Schedule, target: Target) -> Option<usize> {
    schedule
        .steps
        .iter()
        .find(|s| match target {
            Target::Plausible => s.plausible,
            Target::Correct => s.correct,
        })
        .map(|s| s.step)
}

/// `(baseline − new) / baseline`; negative when prioritization is worse.
pub fn reduction(p_baseline: usize, p_new: usize) -> f64 {
    (p_baseline as f64 - p_new as f64) / p_baseline as f64
}

/// `new − baseline`; negative is an improvement.
pub fn displacement(p_baseline: usize, p_new: usize) -> i64 {
    p_new as i64 - p_baseline as i64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugResult {
    pub bug_id: String,
    pub tool_id: String,
    pub target: Target,
    pub p_baseline: Option<usize>,
    pub p_new: Option<usize>,
    pub reduction: Option<f64>,
    pub displacement: Option<i64>,
}

impl BugResult {
    pub fn new(
        bug_id: impl Into<String>,
        tool_id: impl Into<String>,
        target: Target,
        p_baseline: Option<usize>,
        p_new: Option<usize>,
    ) -> Self {
        let both = p_baseline.zip(p_new);
        BugResult {
            bug_id: bug_id.into(),
            tool_id: tool_id.into(),
            target,
            p_baseline,
            p_new,
            reduction: both.map(|(b, n)| reduction(b, n)),
            displacement: both.map(|(b, n)| displacement(b, n)),
        }
    }

    pub fn from_schedules(baseline: &Schedule, prioritized: &Schedule, target: Target) -> Self {
        BugResult::new(
            baseline.bug_id.clone(),
            baseline.tool_id.clone(),
            target,
            first_position(baseline, target),
            first_position(prioritized, target),
        )
    }

    pub fn is_included(&self) -> bool {
        self.p_baseline.is_some() && self.p_new.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub scope: String,
    pub target: Target,
    pub bugs: Vec<BugResult>,
    pub included: usize,
    pub sum_baseline: u64,
    pub sum_new: u64,
    /// `(Σ baseline − Σ new) / Σ baseline` over included bugs.
    pub overall_reduction: Option<f64>,
    pub count_better: usize,
    pub count_worse: usize,
    pub count_tied: usize,
    pub avg_displacement: Option<f64>,
}

/// Aggregates bugs for one target; results for other targets are ignored.
pub fn aggregate(results: &[BugResult], scope: impl Into<String>, target: Target) -> AggregateResult {
    let bugs: Vec<BugResult> = results.iter().filter(|r| r.target == target).cloned().collect();
    let mut agg = AggregateResult {
        scope: scope.into(),
        target,
        bugs,
        included: 0,
        sum_baseline: 0,
        sum_new: 0,
        overall_reduction: None,
        count_better: 0,
        count_worse: 0,
        count_tied: 0,
        avg_displacement: None,
    };
    let mut disp_sum = 0i64;
    for r in &agg.bugs {
        let (Some(b), Some(n)) = (r.p_baseline, r.p_new) else {
            continue;
        };
        agg.included += 1;
        agg.sum_baseline += b as u64;
        agg.sum_new += n as u64;
        let d = displacement(b, n);
        disp_sum += d;
        match d.signum() {
            -1 => agg.count_better += 1,
            1 => agg.count_worse += 1,
            _ => agg.count_tied += 1,
        }
    }
    if agg.sum_baseline > 0 {
        agg.overall_reduction =
            Some((agg.sum_baseline as f64 - agg.sum_new as f64) / agg.sum_baseline as f64);
    }
    if agg.included > 0 {
        agg.avg_displacement = Some(disp_sum as f64 / agg.included as f64);
    }
    agg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{RunConfig, StopCriterion};
    use crate::scheduler::{replay, run_baseline};

    #[test]
    fn example_positions() {
        let ds = fixtures::worked_example();
        let base = run_baseline(&ds);
        let new = replay(&ds, RunConfig::default()).unwrap();
        assert_eq!(first_position(&base, Target::Plausible), Some(4));
        assert_eq!(first_position(&new, Target::Plausible), Some(2));
        assert_eq!(first_position(&new, Target::Correct), Some(2));
    }

    #[test]
    fn no_plausible_step() {
        let ds = fixtures::worked_example();
        let cfg = RunConfig {
            stop: StopCriterion::Exhaust,
            ..RunConfig::default()
        };
        let mut s = replay(&ds, cfg).unwrap();
        s.steps.retain(|st| !st.plausible);
        assert_eq!(first_position(&s, Target::Plausible), None);
    }

    #[test]
    fn reduction_values() {
        assert_eq!(reduction(4, 2), 0.5);
        assert_eq!(reduction(7, 7), 0.0);
        assert!((reduction(616, 63) - 0.898).abs() < 5e-4);
        assert!(reduction(2, 4) < 0.0);
    }

    #[test]
    fn displacement_values() {
        assert_eq!(displacement(4, 2), -2);
        assert_eq!(displacement(9, 9), 0);
    }

    #[test]
    fn aggregate_single_and_cancelling() {
        let one = [BugResult::new("a", "t", Target::Plausible, Some(4), Some(2))];
        assert_eq!(aggregate(&one, "all", Target::Plausible).overall_reduction, Some(0.5));

        let two = [
            BugResult::new("a", "t", Target::Plausible, Some(10), Some(5)),
            BugResult::new("b", "t", Target::Plausible, Some(10), Some(15)),
        ];
        let agg = aggregate(&two, "all", Target::Plausible);
        assert_eq!(agg.overall_reduction, Some(0.0));
        assert_eq!((agg.count_better, agg.count_worse, agg.count_tied), (1, 1, 0));
        assert_eq!(agg.avg_displacement, Some(0.0));
    }

    #[test]
    fn aggregate_excludes_missing_positions() {
        let rs = [
            BugResult::new("a", "t", Target::Plausible, Some(4), Some(2)),
            BugResult::new("b", "t", Target::Plausible, None, None),
            BugResult::new("c", "t", Target::Correct, Some(4), Some(4)),
        ];
        let agg = aggregate(&rs, "all", Target::Plausible);
        assert_eq!(agg.bugs.len(), 2);
        assert_eq!(agg.included, 1);
        assert_eq!(agg.sum_baseline, 4);
        assert!(rs[1].reduction.is_none());
    }

    #[test]
    fn aggregate_is_permutation_invariant() {
        let mut rs: Vec<_> = (1..30)
            .map(|i| BugResult::new(format!("b{i}"), "t", Target::Plausible, Some(i * 3), Some(i * 7 % 40 + 1)))
            .collect();
        let a = aggregate(&rs, "s", Target::Plausible);
        rs.reverse();
        let b = aggregate(&rs, "s", Target::Plausible);
        assert_eq!(a.overall_reduction, b.overall_reduction);
        assert_eq!((a.count_better, a.count_worse), (b.count_better, b.count_worse));
        assert_eq!(a.avg_displacement, b.avg_displacement);
    }
}
