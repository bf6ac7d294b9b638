//! The four-patch, three-test pool used throughout the docs and tests.
//!
//! Method-level element sets: p1 {e1,e2,e3}, p2 {e1,e2,e3,e4}, p3 {e2,e3},
//! p4 {e1}. Fix patterns: p1 {r1}, p2 {r2}, p3 {r3}, p4 {r2}. The baseline
//! fails t1 and t3; p4 is plausible and labeled correct.

use crate::model::{BugDataset, MatrixKind, ModifiedElements, Outcome, PatchRecord, PatternId, TestId};

use Outcome::{Fail as F, Pass as P, Unknown as U};

fn modified(methods: &[usize]) -> ModifiedElements {
    let class = |m: &usize| if *m <= 2 { "org.A" } else { "org.B" };
    ModifiedElements::from_names(
        ["org"],
        methods.iter().map(class),
        methods.iter().map(|m| format!("e{m}")),
        methods.iter().map(|m| format!("s{m}")),
    )
}

fn build(rows: [[Outcome; 3]; 4], kind: MatrixKind) -> BugDataset {
    let elements: [&[usize]; 4] = [&[1, 2, 3], &[1, 2, 3, 4], &[2, 3], &[1]];
    let patterns = ["r1", "r2", "r3", "r2"];
    let patches = (0..4)
        .map(|i| PatchRecord {
            patch_id: format!("p{}", i + 1),
            original_index: i,
            modified: modified(elements[i]),
            patterns: [PatternId::new(patterns[i])].into_iter().collect(),
            results: rows[i].to_vec(),
            correct: Some(i == 3),
        })
        .collect();
    BugDataset::new(
        "Example-1",
        "example-tool",
        vec![TestId::new("t1"), TestId::new("t2"), TestId::new("t3")],
        vec![F, P, F],
        patches,
        kind,
    )
    .expect("fixture is valid")
}

/// Partial validation matrix (execution stops at the first failing test).
pub fn worked_example() -> BugDataset {
    build([[F, U, U], [F, U, U], [P, F, U], [P, P, P]], MatrixKind::Partial)
}

/// Full validation matrix of the same pool.
pub fn worked_example_full() -> BugDataset {
    build([[F, F, F], [F, F, F], [P, F, P], [P, P, P]], MatrixKind::Full)
}
