//! Line-delimited corpus format.
//!
//! A corpus file holds one JSON object per line: a header first, then one
//! record per patch sorted by `original_index`.
//!
//! ```text
//! {"bug_id":"Chart-1","tool_id":"TBar","tests":["t1","t2"],"baseline":{"t1":"fail","t2":"pass"},"matrix_kind":"partial"}
//! {"patch_id":"p1","original_index":0,"modified":{"package":[..],"class":[..],"method":[..],"statement":[..]},"patterns":[],"results":{"t1":"fail","t2":"unknown"},"correct":false}
//! ```
//!
//! [`save_to_string`] always writes the canonical form: fields in the order
//! above, sets sorted, every test present in `results` in header order, and
//! `correct` omitted when unlabeled.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BugDataset, Granularity, Issue, MatrixKind, ModifiedElements, Outcome, PatchRecord, PatternId,
    TestId,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusHeader {
    pub bug_id: String,
    pub tool_id: String,
    pub tests: Vec<String>,
    pub baseline: IndexMap<String, Outcome>,
    pub matrix_kind: MatrixKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModified {
    pub package: Option<Vec<String>>,
    pub class: Option<Vec<String>>,
    pub method: Option<Vec<String>>,
    pub statement: Option<Vec<String>>,
}

impl RawModified {
    fn get(&self, g: Granularity) -> Option<&Vec<String>> {
        match g {
            Granularity::Package => self.package.as_ref(),
            Granularity::Class => self.class.as_ref(),
            Granularity::Method => self.method.as_ref(),
            Granularity::Statement => self.statement.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchLine {
    pub patch_id: String,
    pub original_index: usize,
    pub modified: RawModified,
    #[serde(default)]
    pub patterns: Vec<String>,
    pub results: IndexMap<String, Outcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
}

/// A parsed but unchecked corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDataset {
    pub header: CorpusHeader,
    pub patches: Vec<PatchLine>,
}

/// Every invariant violation in `raw`; empty iff it converts to a
/// [`BugDataset`].
pub fn validate_dataset(raw: &RawDataset) -> Vec<Issue> {
    let mut issues = Vec::new();
    let h = &raw.header;
    let known: HashSet<&str> = h.tests.iter().map(String::as_str).collect();
    for t in &h.tests {
        if !h.baseline.contains_key(t) {
            issues.push(Issue::MissingBaselineTest { test: t.clone() });
        }
    }
    for t in h.baseline.keys() {
        if !known.contains(t.as_str()) {
            issues.push(Issue::UnknownBaselineRef { test: t.clone() });
        }
    }
    for p in &raw.patches {
        for g in Granularity::ALL {
            if p.modified.get(g).is_none() {
                issues.push(Issue::MissingGranularity {
                    patch: p.patch_id.clone(),
                    granularity: g,
                });
            }
        }
        for t in p.results.keys() {
            if !known.contains(t.as_str()) {
                issues.push(Issue::UnknownTestRef {
                    patch: p.patch_id.clone(),
                    test: t.clone(),
                });
            }
        }
    }
    // Model-level invariants on the densified form. A missing baseline cell
    // densifies to Unknown; it is already reported above.
    let missing: HashSet<&str> = h
        .tests
        .iter()
        .filter(|t| !h.baseline.contains_key(*t))
        .map(String::as_str)
        .collect();
    issues.extend(densify(raw).check().into_iter().filter(|i| {
        !matches!(i, Issue::UnknownBaselineOutcome { test } if missing.contains(test.as_str()))
    }));
    issues
}

fn densify(raw: &RawDataset) -> BugDataset {
    let h = &raw.header;
    let tests: Vec<TestId> = h.tests.iter().map(TestId::new).collect();
    let baseline = h
        .tests
        .iter()
        .map(|t| h.baseline.get(t).copied().unwrap_or(Outcome::Unknown))
        .collect();
    let empty = Vec::new();
    let patches = raw
        .patches
        .iter()
        .map(|p| {
            let names = |g| p.modified.get(g).unwrap_or(&empty).iter().cloned();
            PatchRecord {
                patch_id: p.patch_id.clone(),
                original_index: p.original_index,
                modified: ModifiedElements::from_names(
                    names(Granularity::Package),
                    names(Granularity::Class),
                    names(Granularity::Method),
                    names(Granularity::Statement),
                ),
                patterns: p.patterns.iter().map(PatternId::new).collect(),
                results: h
                    .tests
                    .iter()
                    .map(|t| p.results.get(t).copied().unwrap_or(Outcome::Unknown))
                    .collect(),
                correct: p.correct,
            }
        })
        .collect();
    BugDataset::from_parts_unchecked(
        h.bug_id.clone(),
        h.tool_id.clone(),
        tests,
        baseline,
        patches,
        h.matrix_kind,
    )
}

impl RawDataset {
    /// Validates and converts. Result cells missing from a patch record read
    /// as `unknown`.
    pub fn into_dataset(self) -> Result<BugDataset> {
        let issues = validate_dataset(&self);
        if issues.is_empty() {
            Ok(densify(&self))
        } else {
            Err(Error::Invariant(issues))
        }
    }
}

/// Canonical wire form of a dataset.
pub fn to_raw(ds: &BugDataset) -> RawDataset {
    let names = |p: &PatchRecord, g| Some(p.elements(g).iter().map(|e| e.name.clone()).collect());
    RawDataset {
        header: CorpusHeader {
            bug_id: ds.bug_id().to_string(),
            tool_id: ds.tool_id().to_string(),
            tests: ds.tests().iter().map(|t| t.as_str().to_string()).collect(),
            baseline: ds
                .tests()
                .iter()
                .zip(ds.baseline())
                .map(|(t, o)| (t.as_str().to_string(), *o))
                .collect(),
            matrix_kind: ds.matrix_kind(),
        },
        patches: ds
            .patches()
            .iter()
            .map(|p| PatchLine {
                patch_id: p.patch_id.clone(),
                original_index: p.original_index,
                modified: RawModified {
                    package: names(p, Granularity::Package),
                    class: names(p, Granularity::Class),
                    method: names(p, Granularity::Method),
                    statement: names(p, Granularity::Statement),
                },
                patterns: p.patterns.iter().map(|r| r.as_str().to_string()).collect(),
                results: ds
                    .tests()
                    .iter()
                    .zip(&p.results)
                    .map(|(t, o)| (t.as_str().to_string(), *o))
                    .collect(),
                correct: p.correct,
            })
            .collect(),
    }
}

fn parse_line<T: serde::de::DeserializeOwned>(line_no: usize, line: &str) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        reason: e.to_string(),
    })?;
    serde_json::from_value(value).map_err(|e| Error::Schema {
        line: line_no,
        reason: e.to_string(),
    })
}

/// Parses corpus text without checking invariants. Blank lines are skipped;
/// line numbers in errors are 1-based.
pub fn parse_raw(text: &str) -> Result<RawDataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header_line) = lines.next().ok_or(Error::Schema {
        line: 1,
        reason: "missing header record".into(),
    })?;
    let header: CorpusHeader = parse_line(hl, header_line)?;
    let patches = lines
        .map(|(n, l)| parse_line::<PatchLine>(n, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(RawDataset { header, patches })
}

pub fn parse_dataset(text: &str) -> Result<BugDataset> {
    parse_raw(text)?.into_dataset()
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<BugDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

pub fn raw_to_string(raw: &RawDataset) -> String {
    let mut out = serde_json::to_string(&raw.header).expect("header serializes");
    out.push('\n');
    for p in &raw.patches {
        out.push_str(&serde_json::to_string(p).expect("patch serializes"));
        out.push('\n');
    }
    out
}

pub fn save_to_string(ds: &BugDataset) -> String {
    raw_to_string(&to_raw(ds))
}

pub fn save_dataset(ds: &BugDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, save_to_string(ds)).map_err(|e| Error::io(path, e))
}

/// Simulates fail-fast test execution on a full matrix: in each row, outcomes
/// after the first `Fail` (in canonical test order) become `Unknown`.
pub fn derive_partial(ds: &BugDataset) -> Result<BugDataset> {
    if ds.matrix_kind() == MatrixKind::Partial {
        return Err(Error::AlreadyPartial);
    }
    let patches = ds
        .patches()
        .iter()
        .map(|p| {
            let mut p = p.clone();
            if let Some(first_fail) = p.results.iter().position(|o| *o == Outcome::Fail) {
                for o in &mut p.results[first_fail + 1..] {
                    *o = Outcome::Unknown;
                }
            }
            p
        })
        .collect();
    Ok(ds.with_patches(patches, MatrixKind::Partial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::quality::{classify_quality, is_plausible, Quality};
    use crate::synth::{generate_synthetic, SynthParams};
    use proptest::prelude::*;
    use Outcome::{Fail as F, Pass as P, Unknown as U};

    #[test]
    fn example_round_trip() {
        let ds = fixtures::worked_example();
        let text = save_to_string(&ds);
        let back = parse_dataset(&text).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.patches().len(), 4);
        assert_eq!(back.tests().len(), 3);
        assert_eq!(save_to_string(&back), text);
        assert!(text.lines().next().unwrap().starts_with(r#"{"bug_id":"Example-1","tool_id""#));
        assert!(text.contains(r#""results":{"t1":"fail","t2":"unknown","t3":"unknown"}"#));
    }

    #[test]
    fn empty_patch_section() {
        let text = r#"{"bug_id":"B","tool_id":"T","tests":["a"],"baseline":{"a":"fail"},"matrix_kind":"full"}"#;
        let ds = parse_dataset(text).unwrap();
        assert!(ds.patches().is_empty());
    }

    #[test]
    fn canonicalizes_missing_cells_and_order() {
        let text = concat!(
            r#"{"bug_id":"B","tool_id":"T","tests":["a","b"],"baseline":{"b":"pass","a":"fail"},"matrix_kind":"partial"}"#,
            "\n\n",
            r#"{"patch_id":"x","original_index":3,"modified":{"package":["p"],"class":["p.C"],"method":["p.C.n","p.C.m"],"statement":[]},"results":{"a":"fail"}}"#,
            "\n"
        );
        let ds = parse_dataset(text).unwrap();
        assert_eq!(ds.patches()[0].results, [F, U]);
        let canon = save_to_string(&ds);
        assert!(canon.contains(r#""baseline":{"a":"fail","b":"pass"}"#));
        assert!(canon.contains(r#""method":["p.C.m","p.C.n"]"#));
        assert!(!canon.contains("correct"));
        assert_eq!(save_to_string(&parse_dataset(&canon).unwrap()), canon);
    }

    #[test]
    fn parse_error_names_line() {
        let text = "{\"bug_id\":\"B\",\"tool_id\":\"T\",\"tests\":[\"a\"],\"baseline\":{\"a\":\"fail\"},\"matrix_kind\":\"full\"}\n{not json\n";
        assert!(matches!(parse_dataset(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn schema_error_names_field() {
        let text = r#"{"bug_id":"B","tool_id":"T","tests":["a"],"baseline":{"a":"passed"},"matrix_kind":"full"}"#;
        match parse_dataset(text) {
            Err(Error::Schema { line: 1, reason }) => assert!(reason.contains("passed"), "{reason}"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"bug_id":"B","tool_id":"T","tests":["a"],"baseline":{"a":"fail"},"matrix":"full"}"#;
        match parse_dataset(text) {
            Err(Error::Schema { reason, .. }) => assert!(reason.contains("matrix"), "{reason}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validate_known_good() {
        assert!(validate_dataset(&to_raw(&fixtures::worked_example())).is_empty());
    }

    #[test]
    fn validate_no_failing_test() {
        let mut raw = to_raw(&fixtures::worked_example());
        raw.patches.clear();
        for o in raw.header.baseline.values_mut() {
            *o = P;
        }
        assert_eq!(validate_dataset(&raw), [Issue::NoFailingTest]);
    }

    #[test]
    fn validate_unknown_test_ref() {
        let mut raw = to_raw(&fixtures::worked_example());
        raw.patches[1].results.insert("t9".into(), F);
        assert_eq!(
            validate_dataset(&raw),
            [Issue::UnknownTestRef {
                patch: "p2".into(),
                test: "t9".into()
            }]
        );
        assert!(matches!(raw.into_dataset(), Err(Error::Invariant(_))));
    }

    #[test]
    fn validate_structural_issues() {
        let mut raw = to_raw(&fixtures::worked_example());
        raw.patches[0].modified.statement = None;
        raw.patches[2].original_index = 1;
        raw.patches[3].patch_id = "p1".into();
        let issues = validate_dataset(&raw);
        assert!(issues.contains(&Issue::MissingGranularity {
            patch: "p1".into(),
            granularity: Granularity::Statement
        }));
        assert!(issues.contains(&Issue::DuplicateIndex { index: 1 }));
        assert!(issues.contains(&Issue::DuplicatePatchId { patch: "p1".into() }));
    }

    #[test]
    fn validate_unknown_in_full_matrix() {
        let mut raw = to_raw(&fixtures::worked_example());
        raw.header.matrix_kind = MatrixKind::Full;
        let issues = validate_dataset(&raw);
        assert!(issues.contains(&Issue::UnknownInFullMatrix {
            patch: "p1".into(),
            test: "t2".into()
        }));
    }

    #[test]
    fn derive_partial_example_matches_partial_table() {
        let derived = derive_partial(&fixtures::worked_example_full()).unwrap();
        assert_eq!(derived, fixtures::worked_example());
        assert_eq!(derived.patch("p3").unwrap().results, [P, F, U]);
        assert_eq!(derived.patch("p4").unwrap().results, [P, P, P]);
        assert!(matches!(derive_partial(&derived), Err(Error::AlreadyPartial)));
    }

    #[test]
    fn truncation_can_flip_quality_when_a_failing_test_passes_after_the_first_fail() {
        // Baseline: a passes, b fails. Full row: a fails, b passes -> High.
        let ds = BugDataset::new(
            "B",
            "T",
            vec![TestId::new("a"), TestId::new("b")],
            vec![P, F],
            vec![PatchRecord {
                patch_id: "x".into(),
                original_index: 0,
                modified: ModifiedElements::default(),
                patterns: Default::default(),
                results: vec![F, P],
                correct: None,
            }],
            MatrixKind::Full,
        )
        .unwrap();
        let partial = derive_partial(&ds).unwrap();
        assert_eq!(classify_quality(&ds.patches()[0], &ds), Quality::High);
        assert_eq!(classify_quality(&partial.patches()[0], &partial), Quality::Low);
    }

    fn row_shape_ok(row: &[Outcome]) -> bool {
        match row.iter().position(|o| *o == F) {
            None => !row.contains(&U),
            Some(i) => row[..i].iter().all(|o| *o == P) && row[i + 1..].iter().all(|o| *o == U),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn synthetic_round_trip(seed in any::<u64>(), n in 0usize..60) {
            let params = SynthParams { n_patches: n.max(1), ..SynthParams::default() };
            let ds = generate_synthetic(seed, &params).unwrap();
            let text = save_to_string(&ds);
            let back = parse_dataset(&text).unwrap();
            prop_assert_eq!(&back, &ds);
            prop_assert_eq!(save_to_string(&back), text);
        }

        #[test]
        fn derived_rows_are_fail_fast_shaped(seed in any::<u64>()) {
            let ds = generate_synthetic(seed, &SynthParams { n_patches: 40, ..SynthParams::default() }).unwrap();
            let partial = derive_partial(&ds).unwrap();
            for (full, cut) in ds.patches().iter().zip(partial.patches()) {
                prop_assert!(row_shape_ok(&cut.results));
                prop_assert_eq!(is_plausible(full, &ds), is_plausible(cut, &partial));
            }
        }

        // Quality survives truncation when the only originally failing test
        // is also the first test run.
        #[test]
        fn quality_survives_truncation_with_single_leading_failing_test(seed in any::<u64>()) {
            let params = SynthParams { n_patches: 40, n_failing: 1, ..SynthParams::default() };
            let ds = generate_synthetic(seed, &params).unwrap();
            let partial = derive_partial(&ds).unwrap();
            for (full, cut) in ds.patches().iter().zip(partial.patches()) {
                prop_assert_eq!(classify_quality(full, &ds), classify_quality(cut, &partial));
            }
        }
    }
}
