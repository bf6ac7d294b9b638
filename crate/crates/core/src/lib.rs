//! Replay harness for on-the-fly patch prioritization in generate-and-validate
//! program repair.
//!
//! A recorded patch pool (modified elements, applied fix patterns and per-test
//! outcomes for every candidate patch) is replayed in a new order: after each
//! simulated validation the remaining patches are re-ranked by how much their
//! modified elements overlap with already-validated high- and low-quality
//! patches. The overlap counts feed a spectrum-based suspiciousness formula
//! (Ochiai by default) whose value becomes the patch priority.
//!
//! Module map:
//!
//! - [`model`]: immutable patch pool, validation matrix and run configuration.
//! - [`quality`]: high/low quality, plausibility and fix categories.
//! - [`similarity`]: set overlap counts and the cluster-keyed tuple store.
//! - [`formulas`]: the eight priority formulas.
//! - [`scheduler`]: baseline and prioritized replays, warm start.
//! - [`dataset`]: line-delimited corpus format, validation, partial derivation.
//! - [`synth`]: seeded synthetic corpora.
//! - [`metrics`] and [`report`]: reduction/displacement metrics and rendering.
//! - [`batch`]: multi-corpus evaluation and configuration sweeps.

pub mod batch;
pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod formulas;
pub mod metrics;
pub mod model;
pub mod par;
pub mod quality;
pub mod report;
pub mod scheduler;
pub mod similarity;
pub mod synth;

pub use error::{Error, Result};
pub use formulas::{score, Formula, PriorityScore};
pub use model::{
    elements_of, originally_failing, BugDataset, ElementId, Granularity, Issue, MatrixKind,
    ModifiedElements, Outcome, PatchRecord, PatternId, RunConfig, SimilarityTuple, StopCriterion,
    TestId,
};
pub use par::Execution;
pub use quality::{classify_category, classify_quality, is_correct, is_plausible, FixCategory, Quality};
pub use scheduler::{replay, replay_with_history, run_baseline, Replay, Schedule, ScheduleStep, StopReason};
