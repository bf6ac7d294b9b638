//! Immutable data model shared by every other module.
//!
//! Outcomes are stored densely: `PatchRecord::results[i]` is the outcome of
//! `BugDataset::tests()[i]`. Name-keyed maps only exist on the wire (see
//! [`crate::dataset`]).

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulas::Formula;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TestId(String);

impl TestId {
    pub fn new(name: impl Into<String>) -> Self {
        TestId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Program-element granularity, ordered coarse to fine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Package,
    Class,
    Method,
    Statement,
}

impl Granularity {
    pub const ALL: [Granularity; 4] = [
        Granularity::Package,
        Granularity::Class,
        Granularity::Method,
        Granularity::Statement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Package => "package",
            Granularity::Class => "class",
            Granularity::Method => "method",
            Granularity::Statement => "statement",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Granularity::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownGranularity(s.to_string()))
    }
}

/// A modified program element. Names are opaque; the library never parses them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId {
    pub granularity: Granularity,
    pub name: String,
}

impl ElementId {
    pub fn new(granularity: Granularity, name: impl Into<String>) -> Self {
        ElementId {
            granularity,
            name: name.into(),
        }
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.granularity, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternId(String);

impl PatternId {
    pub fn new(name: impl Into<String>) -> Self {
        PatternId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    #[default]
    Partial,
    Full,
}

impl MatrixKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatrixKind::Partial => "partial",
            MatrixKind::Full => "full",
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "partial" => Ok(MatrixKind::Partial),
            "full" => Ok(MatrixKind::Full),
            _ => Err(Error::UnknownMatrixKind(s.to_string())),
        }
    }
}

/// Modified elements of one patch at all four granularities.
///
/// Every granularity is always present (possibly empty) and each stored
/// `ElementId` carries the granularity of the slot it lives in.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModifiedElements {
    sets: [BTreeSet<ElementId>; 4],
}

impl ModifiedElements {
    pub fn from_names<P, C, M, S>(package: P, class: C, method: M, statement: S) -> Self
    where
        P: IntoIterator,
        P::Item: Into<String>,
        C: IntoIterator,
        C::Item: Into<String>,
        M: IntoIterator,
        M::Item: Into<String>,
        S: IntoIterator,
        S::Item: Into<String>,
    {
        fn collect<I>(g: Granularity, names: I) -> BTreeSet<ElementId>
        where
            I: IntoIterator,
            I::Item: Into<String>,
        {
            names.into_iter().map(|n| ElementId::new(g, n)).collect()
        }
        ModifiedElements {
            sets: [
                collect(Granularity::Package, package),
                collect(Granularity::Class, class),
                collect(Granularity::Method, method),
                collect(Granularity::Statement, statement),
            ],
        }
    }

    /// Replaces the set at `g`. Names are re-tagged with `g`.
    pub fn with<I>(mut self, g: Granularity, names: I) -> Self
    where
        I: IntoIterator,
        I::Item: Into<String>,
    {
        self.sets[g.slot()] = names.into_iter().map(|n| ElementId::new(g, n)).collect();
        self
    }

    pub fn get(&self, g: Granularity) -> &BTreeSet<ElementId> {
        &self.sets[g.slot()]
    }
}

/// One candidate patch: identity, original position, modified elements,
/// applied fix patterns, recorded outcomes and an optional correctness label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchRecord {
    pub patch_id: String,
    /// 0-based position in the tool's original validation order.
    pub original_index: usize,
    pub modified: ModifiedElements,
    pub patterns: BTreeSet<PatternId>,
    /// Outcome per test, aligned with the owning dataset's test list.
    pub results: Vec<Outcome>,
    pub correct: Option<bool>,
}

impl PatchRecord {
    pub fn elements(&self, g: Granularity) -> &BTreeSet<ElementId> {
        self.modified.get(g)
    }
}

pub fn elements_of(patch: &PatchRecord, g: Granularity) -> &BTreeSet<ElementId> {
    patch.elements(g)
}

/// Validation problems reported by [`crate::dataset::validate_dataset`] and
/// [`BugDataset::new`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum Issue {
    EmptyIdentifier { what: String },
    DuplicateTest { test: String },
    MissingBaselineTest { test: String },
    UnknownBaselineRef { test: String },
    UnknownBaselineOutcome { test: String },
    NoFailingTest,
    DuplicatePatchId { patch: String },
    DuplicateIndex { index: usize },
    UnsortedPatches { patch: String },
    MissingGranularity { patch: String, granularity: Granularity },
    UnknownTestRef { patch: String, test: String },
    ResultsLength { patch: String, expected: usize, found: usize },
    UnknownInFullMatrix { patch: String, test: String },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::EmptyIdentifier { what } => write!(f, "empty identifier: {what}"),
            Issue::DuplicateTest { test } => write!(f, "duplicate test `{test}`"),
            Issue::MissingBaselineTest { test } => {
                write!(f, "baseline has no outcome for test `{test}`")
            }
            Issue::UnknownBaselineRef { test } => {
                write!(f, "baseline references unknown test `{test}`")
            }
            Issue::UnknownBaselineOutcome { test } => {
                write!(f, "baseline outcome for `{test}` is unknown")
            }
            Issue::NoFailingTest => write!(f, "baseline has no failing test"),
            Issue::DuplicatePatchId { patch } => write!(f, "duplicate patch id `{patch}`"),
            Issue::DuplicateIndex { index } => write!(f, "duplicate original_index {index}"),
            Issue::UnsortedPatches { patch } => {
                write!(f, "patch `{patch}` is out of original_index order")
            }
            Issue::MissingGranularity { patch, granularity } => {
                write!(f, "patch `{patch}` has no {granularity} element set")
            }
            Issue::UnknownTestRef { patch, test } => {
                write!(f, "patch `{patch}` references unknown test `{test}`")
            }
            Issue::ResultsLength {
                patch,
                expected,
                found,
            } => write!(f, "patch `{patch}` has {found} results, expected {expected}"),
            Issue::UnknownInFullMatrix { patch, test } => {
                write!(f, "patch `{patch}` has an unknown outcome for `{test}` in a full matrix")
            }
        }
    }
}

/// All recorded validation data for one bug and one repair tool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BugDataset {
    bug_id: String,
    tool_id: String,
    tests: Vec<TestId>,
    baseline: Vec<Outcome>,
    patches: Vec<PatchRecord>,
    matrix_kind: MatrixKind,
}

impl BugDataset {
    /// Builds a dataset, rejecting it with [`Error::Invariant`] if any model
    /// invariant is violated.
    pub fn new(
        bug_id: impl Into<String>,
        tool_id: impl Into<String>,
        tests: Vec<TestId>,
        baseline: Vec<Outcome>,
        patches: Vec<PatchRecord>,
        matrix_kind: MatrixKind,
    ) -> Result<Self> {
        let ds = BugDataset {
            bug_id: bug_id.into(),
            tool_id: tool_id.into(),
            tests,
            baseline,
            patches,
            matrix_kind,
        };
        let issues = ds.check();
        if issues.is_empty() {
            Ok(ds)
        } else {
            Err(Error::Invariant(issues))
        }
    }

    pub(crate) fn from_parts_unchecked(
        bug_id: String,
        tool_id: String,
        tests: Vec<TestId>,
        baseline: Vec<Outcome>,
        patches: Vec<PatchRecord>,
        matrix_kind: MatrixKind,
    ) -> Self {
        BugDataset {
            bug_id,
            tool_id,
            tests,
            baseline,
            patches,
            matrix_kind,
        }
    }

    pub(crate) fn check(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        if self.bug_id.is_empty() {
            issues.push(Issue::EmptyIdentifier {
                what: "bug_id".into(),
            });
        }
        if self.tool_id.is_empty() {
            issues.push(Issue::EmptyIdentifier {
                what: "tool_id".into(),
            });
        }
        let mut seen = HashSet::new();
        for t in &self.tests {
            if t.as_str().is_empty() {
                issues.push(Issue::EmptyIdentifier {
                    what: "test name".into(),
                });
            }
            if !seen.insert(t) {
                issues.push(Issue::DuplicateTest {
                    test: t.to_string(),
                });
            }
        }
        if self.baseline.len() != self.tests.len() {
            for t in self.tests.iter().skip(self.baseline.len()) {
                issues.push(Issue::MissingBaselineTest {
                    test: t.to_string(),
                });
            }
        }
        for (t, o) in self.tests.iter().zip(&self.baseline) {
            if *o == Outcome::Unknown {
                issues.push(Issue::UnknownBaselineOutcome {
                    test: t.to_string(),
                });
            }
        }
        if !self.baseline.contains(&Outcome::Fail) {
            issues.push(Issue::NoFailingTest);
        }

        let mut ids = HashSet::new();
        let mut indices = HashSet::new();
        let mut prev: Option<usize> = None;
        for p in &self.patches {
            if p.patch_id.is_empty() {
                issues.push(Issue::EmptyIdentifier {
                    what: "patch_id".into(),
                });
            }
            if !ids.insert(p.patch_id.as_str()) {
                issues.push(Issue::DuplicatePatchId {
                    patch: p.patch_id.clone(),
                });
            }
            if !indices.insert(p.original_index) {
                issues.push(Issue::DuplicateIndex {
                    index: p.original_index,
                });
            } else if prev.is_some_and(|q| q > p.original_index) {
                issues.push(Issue::UnsortedPatches {
                    patch: p.patch_id.clone(),
                });
            }
            prev = Some(p.original_index);
            if p.results.len() != self.tests.len() {
                issues.push(Issue::ResultsLength {
                    patch: p.patch_id.clone(),
                    expected: self.tests.len(),
                    found: p.results.len(),
                });
            } else if self.matrix_kind == MatrixKind::Full {
                for (t, o) in self.tests.iter().zip(&p.results) {
                    if *o == Outcome::Unknown {
                        issues.push(Issue::UnknownInFullMatrix {
                            patch: p.patch_id.clone(),
                            test: t.to_string(),
                        });
                    }
                }
            }
        }
        issues
    }

    pub fn bug_id(&self) -> &str {
        &self.bug_id
    }

    pub fn tool_id(&self) -> &str {
        &self.tool_id
    }

    /// Tests in canonical order.
    pub fn tests(&self) -> &[TestId] {
        &self.tests
    }

    /// Baseline outcomes aligned with [`Self::tests`].
    pub fn baseline(&self) -> &[Outcome] {
        &self.baseline
    }

    /// Patches sorted by `original_index`.
    pub fn patches(&self) -> &[PatchRecord] {
        &self.patches
    }

    pub fn matrix_kind(&self) -> MatrixKind {
        self.matrix_kind
    }

    pub fn patch(&self, patch_id: &str) -> Option<&PatchRecord> {
        self.patches.iter().find(|p| p.patch_id == patch_id)
    }

    pub fn test_position(&self, test: &TestId) -> Option<usize> {
        self.tests.iter().position(|t| t == test)
    }

    /// Recorded outcome of `test` on `patch`; `None` if the test is unknown.
    pub fn outcome(&self, patch: &PatchRecord, test: &TestId) -> Option<Outcome> {
        self.test_position(test)
            .and_then(|i| patch.results.get(i).copied())
    }

    pub(crate) fn failing_mask(&self) -> impl Iterator<Item = bool> + '_ {
        self.baseline.iter().map(|o| *o == Outcome::Fail)
    }

    /// Whether any patch carries a correctness label.
    pub fn has_correctness_labels(&self) -> bool {
        self.patches.iter().any(|p| p.correct.is_some())
    }

    pub(crate) fn with_patches(&self, patches: Vec<PatchRecord>, matrix_kind: MatrixKind) -> Self {
        BugDataset {
            bug_id: self.bug_id.clone(),
            tool_id: self.tool_id.clone(),
            tests: self.tests.clone(),
            baseline: self.baseline.clone(),
            patches,
            matrix_kind,
        }
    }
}

/// Tests whose baseline outcome is `Fail`, in canonical order.
pub fn originally_failing(ds: &BugDataset) -> Result<Vec<&TestId>> {
    let failing: Vec<&TestId> = ds
        .tests
        .iter()
        .zip(&ds.baseline)
        .filter(|(_, o)| **o == Outcome::Fail)
        .map(|(t, _)| t)
        .collect();
    if failing.is_empty() {
        Err(Error::EmptyFailingSet)
    } else {
        Ok(failing)
    }
}

/// The (ef, nf, ep, np) accumulator of one patch or cluster.
///
/// `ef`/`nf` count element matches/differences against validated high-quality
/// patches, `ep`/`np` against low-quality ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SimilarityTuple {
    pub ef: u64,
    pub nf: u64,
    pub ep: u64,
    pub np: u64,
}

impl SimilarityTuple {
    pub const INITIAL: SimilarityTuple = SimilarityTuple {
        ef: 1,
        nf: 1,
        ep: 1,
        np: 1,
    };

    pub const fn new(ef: u64, nf: u64, ep: u64, np: u64) -> Self {
        SimilarityTuple { ef, nf, ep, np }
    }
}

impl Default for SimilarityTuple {
    fn default() -> Self {
        Self::INITIAL
    }
}

impl fmt::Display for SimilarityTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.ef, self.nf, self.ep, self.np)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopCriterion {
    #[default]
    Exhaust,
    #[serde(rename = "plausible")]
    FirstPlausible,
    #[serde(rename = "correct")]
    FirstCorrect,
}

impl StopCriterion {
    pub fn as_str(self) -> &'static str {
        match self {
            StopCriterion::Exhaust => "exhaust",
            StopCriterion::FirstPlausible => "plausible",
            StopCriterion::FirstCorrect => "correct",
        }
    }
}

impl FromStr for StopCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exhaust" => Ok(StopCriterion::Exhaust),
            "plausible" => Ok(StopCriterion::FirstPlausible),
            "correct" => Ok(StopCriterion::FirstCorrect),
            _ => Err(Error::UnknownStop(s.to_string())),
        }
    }
}

/// Prioritization settings. The default is Ochiai at method granularity on
/// partial matrices using modified elements only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunConfig {
    pub formula: Formula,
    pub granularity: Granularity,
    pub matrix_kind: MatrixKind,
    pub pattern_augmented: bool,
    pub stop: StopCriterion,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            formula: Formula::Ochiai,
            granularity: Granularity::Method,
            matrix_kind: MatrixKind::Partial,
            pattern_augmented: false,
            stop: StopCriterion::Exhaust,
        }
    }
}
