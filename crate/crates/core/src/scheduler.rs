//! Baseline and prioritized replays over a recorded patch pool.
//!
//! "Executing" a patch during replay means looking up its recorded results
//! row. Recorded rows are order-independent, so the verdicts observed in any
//! replay order are the ones the tool would have observed.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dataset::derive_partial;
use crate::error::{Error, Result};
use crate::formulas::PriorityScore;
use crate::model::{BugDataset, Granularity, MatrixKind, RunConfig, SimilarityTuple, StopCriterion};
use crate::quality::{classify_quality, is_correct, is_plausible, Quality};
use crate::similarity::{cluster_patches, TupleStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStep {
    /// 1-based position in the schedule.
    pub step: usize,
    pub patch_id: String,
    pub original_index: usize,
    /// Priority at the moment the patch was popped; absent for baseline runs.
    pub score_at_pop: Option<PriorityScore>,
    pub quality: Quality,
    pub plausible: bool,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopReason {
    Exhausted,
    FirstPlausible,
    FirstCorrect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub bug_id: String,
    pub tool_id: String,
    /// `None` for the original-order baseline.
    pub config: Option<RunConfig>,
    pub warm_start_sources: Vec<String>,
    pub steps: Vec<ScheduleStep>,
    pub stop_reason: StopReason,
}

impl Schedule {
    pub fn patch_ids(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.patch_id.as_str())
    }
}

/// One validated patch from another tool's run on the same bug.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignPatch {
    pub elements: BTreeMap<Granularity, BTreeSet<String>>,
    pub patterns: BTreeSet<String>,
    pub quality: Quality,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarmStartHistory {
    pub bug_id: String,
    pub source_tool: String,
    pub validated: Vec<ForeignPatch>,
}

impl WarmStartHistory {
    /// Validates every patch of a foreign pool and keeps the ones not labeled
    /// correct.
    pub fn from_dataset(foreign: &BugDataset) -> Self {
        let validated = foreign
            .patches()
            .iter()
            .filter(|p| !is_correct(p))
            .map(|p| ForeignPatch {
                elements: Granularity::ALL
                    .into_iter()
                    .map(|g| (g, p.elements(g).iter().map(|e| e.name.clone()).collect()))
                    .collect(),
                patterns: p.patterns.iter().map(|r| r.as_str().to_string()).collect(),
                quality: classify_quality(p, foreign),
                correct: false,
            })
            .collect();
        WarmStartHistory {
            bug_id: foreign.bug_id().to_string(),
            source_tool: foreign.tool_id().to_string(),
            validated,
        }
    }
}

/// Steps in original order.
pub fn run_baseline(ds: &BugDataset) -> Schedule {
    let mut order: Vec<_> = ds.patches().iter().collect();
    order.sort_by_key(|p| p.original_index);
    let steps = order
        .into_iter()
        .enumerate()
        .map(|(i, p)| ScheduleStep {
            step: i + 1,
            patch_id: p.patch_id.clone(),
            original_index: p.original_index,
            score_at_pop: None,
            quality: classify_quality(p, ds),
            plausible: is_plausible(p, ds),
            correct: is_correct(p),
        })
        .collect();
    Schedule {
        bug_id: ds.bug_id().to_string(),
        tool_id: ds.tool_id().to_string(),
        config: None,
        warm_start_sources: Vec::new(),
        steps,
        stop_reason: StopReason::Exhausted,
    }
}

/// Fresh store for `ds` with every foreign validated patch folded in.
pub fn warm_start(
    ds: &BugDataset,
    histories: &[WarmStartHistory],
    cfg: &RunConfig,
) -> Result<TupleStore> {
    let mut store = cluster_patches(ds.patches(), cfg);
    for h in histories {
        if h.bug_id != ds.bug_id() {
            return Err(Error::HistoryBugMismatch {
                source_tool: h.source_tool.clone(),
                expected: ds.bug_id().to_string(),
                found: h.bug_id.clone(),
            });
        }
        for fp in h.validated.iter().filter(|fp| !fp.correct) {
            let elements = fp
                .elements
                .get(&cfg.granularity)
                .ok_or_else(|| Error::GranularityMissing {
                    source_tool: h.source_tool.clone(),
                    granularity: cfg.granularity,
                })?;
            let ev = store.evidence_from_names(
                elements.iter().map(String::as_str),
                fp.patterns.iter().map(String::as_str),
            );
            store.update(&ev, fp.quality);
        }
    }
    Ok(store)
}

/// Time spent on prioritization bookkeeping (pops and tuple updates),
/// excluding the recorded-outcome lookups.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplayTimings {
    pub setup: Duration,
    pub bookkeeping: Duration,
    pub steps: usize,
}

impl ReplayTimings {
    pub fn total(&self) -> Duration {
        self.setup + self.bookkeeping
    }
}

/// A prioritized replay that can be driven one validation at a time.
pub struct Replay<'a> {
    ds: Cow<'a, BugDataset>,
    cfg: RunConfig,
    store: TupleStore,
    sources: Vec<String>,
    steps: Vec<ScheduleStep>,
    stop_reason: Option<StopReason>,
    timings: ReplayTimings,
}

impl<'a> Replay<'a> {
    pub fn new(ds: &'a BugDataset, cfg: RunConfig, histories: &[WarmStartHistory]) -> Result<Self> {
        let started = Instant::now();
        let ds = match (cfg.matrix_kind, ds.matrix_kind()) {
            (MatrixKind::Full, MatrixKind::Partial) => {
                return Err(Error::IncompatibleMatrix {
                    wanted: MatrixKind::Full,
                    found: MatrixKind::Partial,
                })
            }
            (MatrixKind::Partial, MatrixKind::Full) => Cow::Owned(derive_partial(ds)?),
            _ => Cow::Borrowed(ds),
        };
        if cfg.stop == StopCriterion::FirstCorrect
            && !ds.patches().is_empty()
            && !ds.has_correctness_labels()
        {
            return Err(Error::MissingCorrectnessLabels);
        }
        let store = warm_start(&ds, histories, &cfg)?;
        let timings = ReplayTimings {
            setup: started.elapsed(),
            ..ReplayTimings::default()
        };
        Ok(Replay {
            ds,
            cfg,
            store,
            sources: histories.iter().map(|h| h.source_tool.clone()).collect(),
            steps: Vec::new(),
            stop_reason: None,
            timings,
        })
    }

    pub fn with_execution(mut self, execution: crate::par::Execution) -> Self {
        self.store = self.store.with_execution(execution);
        self
    }

    /// The dataset being replayed (the partial view when the configuration
    /// asks for partial matrices on a full corpus).
    pub fn dataset(&self) -> &BugDataset {
        &self.ds
    }

    pub fn store(&self) -> &TupleStore {
        &self.store
    }

    pub fn steps(&self) -> &[ScheduleStep] {
        &self.steps
    }

    pub fn is_done(&self) -> bool {
        self.stop_reason.is_some() || self.store.is_empty()
    }

    fn position_of(&self, patch_id: &str) -> Option<usize> {
        self.ds.patches().iter().position(|p| p.patch_id == patch_id)
    }

    /// Current tuple of a remaining patch.
    pub fn tuple_of(&self, patch_id: &str) -> Option<SimilarityTuple> {
        self.store.tuple_of(self.position_of(patch_id)?)
    }

    pub fn score_of(&self, patch_id: &str) -> Option<PriorityScore> {
        self.store.score_of(self.position_of(patch_id)?, self.cfg.formula)
    }

    /// Pops the highest-priority patch, reads its recorded outcomes, and
    /// folds the verdict into the remaining tuples.
    pub fn step(&mut self) -> Option<&ScheduleStep> {
        if self.is_done() {
            return None;
        }
        let t0 = Instant::now();
        let popped = self.store.pop_highest(self.cfg.formula).ok()?;
        let mut spent = t0.elapsed();

        let patch = &self.ds.patches()[popped.position];
        let quality = classify_quality(patch, &self.ds);
        let step = ScheduleStep {
            step: self.steps.len() + 1,
            patch_id: patch.patch_id.clone(),
            original_index: patch.original_index,
            score_at_pop: Some(popped.score),
            quality,
            plausible: is_plausible(patch, &self.ds),
            correct: is_correct(patch),
        };

        let t1 = Instant::now();
        self.store.update(&popped.evidence, quality);
        spent += t1.elapsed();
        self.timings.bookkeeping += spent;
        self.timings.steps += 1;

        self.stop_reason = match self.cfg.stop {
            StopCriterion::FirstPlausible if step.plausible => Some(StopReason::FirstPlausible),
            StopCriterion::FirstCorrect if step.correct => Some(StopReason::FirstCorrect),
            _ => None,
        };
        self.steps.push(step);
        self.steps.last()
    }

    pub fn timings(&self) -> ReplayTimings {
        self.timings
    }

    pub fn run(mut self) -> (Schedule, ReplayTimings) {
        while self.step().is_some() {}
        let timings = self.timings;
        (self.finish(), timings)
    }

    pub fn finish(self) -> Schedule {
        Schedule {
            bug_id: self.ds.bug_id().to_string(),
            tool_id: self.ds.tool_id().to_string(),
            config: Some(self.cfg),
            warm_start_sources: self.sources,
            steps: self.steps,
            stop_reason: self.stop_reason.unwrap_or(StopReason::Exhausted),
        }
    }
}

pub fn replay(ds: &BugDataset, cfg: RunConfig) -> Result<Schedule> {
    replay_with_history(ds, cfg, &[])
}

pub fn replay_with_history(
    ds: &BugDataset,
    cfg: RunConfig,
    histories: &[WarmStartHistory],
) -> Result<Schedule> {
    Ok(Replay::new(ds, cfg, histories)?.run().0)
}

pub fn replay_timed(
    ds: &BugDataset,
    cfg: RunConfig,
    histories: &[WarmStartHistory],
) -> Result<(Schedule, ReplayTimings)> {
    Ok(Replay::new(ds, cfg, histories)?.run())
}
