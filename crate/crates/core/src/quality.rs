//! Verdicts on executed patches.
//!
//! `Unknown` cells count as "not pass" for quality and as neither pass nor
//! fail for fix categories.

use serde::{Deserialize, Serialize};

use crate::model::{BugDataset, Outcome, PatchRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    /// At least one originally failing test now passes.
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FixCategory {
    CleanFix,
    NoisyFix,
    NoneFix,
    NoFix,
}

impl FixCategory {
    pub const ALL: [FixCategory; 4] = [
        FixCategory::CleanFix,
        FixCategory::NoisyFix,
        FixCategory::NoneFix,
        FixCategory::NoFix,
    ];
}

fn improves(patch: &PatchRecord, ds: &BugDataset) -> bool {
    ds.failing_mask()
        .zip(&patch.results)
        .any(|(failing, o)| failing && *o == Outcome::Pass)
}

fn compromises(patch: &PatchRecord, ds: &BugDataset) -> bool {
    ds.failing_mask()
        .zip(&patch.results)
        .any(|(failing, o)| !failing && *o == Outcome::Fail)
}

pub fn classify_quality(patch: &PatchRecord, ds: &BugDataset) -> Quality {
    if improves(patch, ds) {
        Quality::High
    } else {
        Quality::Low
    }
}

/// Every test in the suite was recorded as passing.
pub fn is_plausible(patch: &PatchRecord, ds: &BugDataset) -> bool {
    patch.results.len() == ds.tests().len() && patch.results.iter().all(|o| *o == Outcome::Pass)
}

/// The external correctness label; unlabeled patches are not correct.
pub fn is_correct(patch: &PatchRecord) -> bool {
    patch.correct.unwrap_or(false)
}

pub fn classify_category(patch: &PatchRecord, ds: &BugDataset) -> FixCategory {
    match (improves(patch, ds), compromises(patch, ds)) {
        (true, false) => FixCategory::CleanFix,
        (true, true) => FixCategory::NoisyFix,
        (false, true) => FixCategory::NoneFix,
        (false, false) => FixCategory::NoFix,
    }
}
