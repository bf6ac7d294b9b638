//! Seeded synthetic corpora with planted structure.
//!
//! Patches are drawn from a fixed number of statement-set classes, so pools
//! cluster the way real tool output does (many templates applied at the same
//! locations). Each class carries a propensity factor that scales its
//! plausible/high-quality rates, which gives prioritization something to
//! learn. Statements map to methods, methods to classes and classes to
//! packages through a seeded hierarchy, so coarser element sets are always
//! the images of finer ones. Originally failing tests come first in the
//! canonical test order.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BugDataset, MatrixKind, ModifiedElements, Outcome, PatchRecord, PatternId, TestId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub n_patches: usize,
    pub n_tests: usize,
    /// Originally failing tests; placed first in canonical order.
    pub n_failing: usize,
    pub n_packages: usize,
    pub n_classes: usize,
    pub n_methods: usize,
    pub n_statements: usize,
    /// Distinct statement sets patches are drawn from.
    pub n_element_sets: usize,
    /// Largest statement set size.
    pub max_set_size: usize,
    /// Fix-pattern vocabulary size; 0 leaves every pattern set empty.
    pub n_patterns: usize,
    pub plausible_rate: f64,
    pub high_rate: f64,
    /// Share of plausible patches labeled correct.
    pub correct_rate: f64,
    /// Probability that a non-plausible patch breaks an originally passing test.
    pub regression_rate: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_patches: 200,
            n_tests: 20,
            n_failing: 2,
            n_packages: 3,
            n_classes: 8,
            n_methods: 30,
            n_statements: 120,
            n_element_sets: 20,
            max_set_size: 3,
            n_patterns: 8,
            plausible_rate: 0.05,
            high_rate: 0.2,
            correct_rate: 0.5,
            regression_rate: 0.1,
        }
    }
}

impl SynthParams {
    fn check(&self) -> Result<()> {
        let positive = [
            ("n_patches", self.n_patches),
            ("n_tests", self.n_tests),
            ("n_failing", self.n_failing),
            ("n_packages", self.n_packages),
            ("n_classes", self.n_classes),
            ("n_methods", self.n_methods),
            ("n_statements", self.n_statements),
            ("n_element_sets", self.n_element_sets),
            ("max_set_size", self.max_set_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::BadParams(format!("{name} must be positive")));
            }
        }
        if self.n_failing > self.n_tests {
            return Err(Error::BadParams("n_failing exceeds n_tests".into()));
        }
        if self.max_set_size > self.n_statements {
            return Err(Error::BadParams("max_set_size exceeds n_statements".into()));
        }
        let rates = [
            ("plausible_rate", self.plausible_rate),
            ("high_rate", self.high_rate),
            ("correct_rate", self.correct_rate),
            ("regression_rate", self.regression_rate),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::BadParams(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

struct Hierarchy {
    class_pkg: Vec<usize>,
    method_class: Vec<usize>,
    stmt_method: Vec<usize>,
}

impl Hierarchy {
    fn package_name(&self, p: usize) -> String {
        format!("org.p{p}")
    }

    fn class_name(&self, c: usize) -> String {
        format!("org.p{}.C{c}", self.class_pkg[c])
    }

    fn method_name(&self, m: usize) -> String {
        format!("{}.m{m}()", self.class_name(self.method_class[m]))
    }

    fn statement_name(&self, s: usize) -> String {
        let c = self.method_class[self.stmt_method[s]];
        format!("org/p{}/C{c}.java:{}", self.class_pkg[c], s + 1)
    }

    fn modified(&self, stmts: &[usize]) -> ModifiedElements {
        let methods: BTreeSet<usize> = stmts.iter().map(|&s| self.stmt_method[s]).collect();
        let classes: BTreeSet<usize> = methods.iter().map(|&m| self.method_class[m]).collect();
        let packages: BTreeSet<usize> = classes.iter().map(|&c| self.class_pkg[c]).collect();
        ModifiedElements::from_names(
            packages.iter().map(|&p| self.package_name(p)),
            classes.iter().map(|&c| self.class_name(c)),
            methods.iter().map(|&m| self.method_name(m)),
            stmts.iter().map(|&s| self.statement_name(s)),
        )
    }
}

struct SetClass {
    statements: Vec<usize>,
    patterns: Vec<usize>,
    propensity: f64,
}

enum Kind {
    Plausible,
    High,
    Low,
}

/// Deterministic in `seed`; always returns a valid full-matrix dataset.
pub fn generate_synthetic(seed: u64, params: &SynthParams) -> Result<BugDataset> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let h = Hierarchy {
        class_pkg: (0..params.n_classes)
            .map(|_| rng.gen_range(0..params.n_packages))
            .collect(),
        method_class: (0..params.n_methods)
            .map(|_| rng.gen_range(0..params.n_classes))
            .collect(),
        stmt_method: (0..params.n_statements)
            .map(|_| rng.gen_range(0..params.n_methods))
            .collect(),
    };

    let classes: Vec<SetClass> = (0..params.n_element_sets)
        .map(|_| {
            let size = rng.gen_range(1..=params.max_set_size);
            let mut statements = sample(&mut rng, params.n_statements, size).into_vec();
            statements.sort_unstable();
            let patterns = if params.n_patterns == 0 {
                Vec::new()
            } else {
                let k = rng.gen_range(1..=params.n_patterns.min(2));
                sample(&mut rng, params.n_patterns, k).into_vec()
            };
            SetClass {
                statements,
                patterns,
                propensity: rng.gen_range(0.0..2.0),
            }
        })
        .collect();

    let tests: Vec<TestId> = (0..params.n_tests)
        .map(|i| TestId::new(format!("org.p0.SuiteTest::test{i:04}")))
        .collect();
    let baseline: Vec<Outcome> = (0..params.n_tests)
        .map(|i| if i < params.n_failing { Outcome::Fail } else { Outcome::Pass })
        .collect();

    let mut patches = Vec::with_capacity(params.n_patches);
    for i in 0..params.n_patches {
        let class = &classes[rng.gen_range(0..classes.len())];
        let patterns: BTreeSet<PatternId> = class
            .patterns
            .get(rng.gen_range(0..class.patterns.len().max(1)))
            .map(|r| PatternId::new(format!("pattern{r}")))
            .into_iter()
            .collect();

        let kind = if rng.gen_bool((params.plausible_rate * class.propensity).min(1.0)) {
            Kind::Plausible
        } else if rng.gen_bool((params.high_rate * class.propensity).min(1.0)) {
            Kind::High
        } else {
            Kind::Low
        };
        let results = outcome_row(&mut rng, params, kind);
        let plausible = results.iter().all(|o| *o == Outcome::Pass);
        let correct = plausible && rng.gen_bool(params.correct_rate);

        patches.push(PatchRecord {
            patch_id: format!("P{i:05}"),
            original_index: i,
            modified: h.modified(&class.statements),
            patterns,
            results,
            correct: Some(correct),
        });
    }

    BugDataset::new(
        format!("Synth-{seed}"),
        "synth",
        tests,
        baseline,
        patches,
        MatrixKind::Full,
    )
}

fn outcome_row(rng: &mut ChaCha8Rng, params: &SynthParams, kind: Kind) -> Vec<Outcome> {
    let (nt, nf) = (params.n_tests, params.n_failing);
    let mut row = vec![Outcome::Pass; nt];
    match kind {
        Kind::Plausible => {}
        Kind::Low => {
            row[..nf].fill(Outcome::Fail);
            regress(rng, params, &mut row);
        }
        Kind::High => {
            let fixed = rng.gen_range(0..nf);
            for (j, o) in row[..nf].iter_mut().enumerate() {
                if j != fixed && rng.gen_bool(0.5) {
                    *o = Outcome::Fail;
                }
            }
            regress(rng, params, &mut row);
            if !row.contains(&Outcome::Fail) {
                // Must not be plausible: break something.
                if nt > nf {
                    row[rng.gen_range(nf..nt)] = Outcome::Fail;
                } else if nf > 1 {
                    row[(fixed + 1) % nf] = Outcome::Fail;
                } else {
                    row[0] = Outcome::Fail;
                }
            }
        }
    }
    row
}

fn regress(rng: &mut ChaCha8Rng, params: &SynthParams, row: &mut [Outcome]) {
    for o in &mut row[params.n_failing..] {
        if rng.gen_bool(params.regression_rate) {
            *o = Outcome::Fail;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{save_to_string, to_raw, validate_dataset};
    use crate::model::Granularity;
    use crate::quality::is_plausible;

    #[test]
    fn same_seed_same_corpus() {
        let p = SynthParams::default();
        let a = save_to_string(&generate_synthetic(42, &p).unwrap());
        let b = save_to_string(&generate_synthetic(42, &p).unwrap());
        assert_eq!(a, b);
        let c = save_to_string(&generate_synthetic(43, &p).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn zero_plausible_rate() {
        let p = SynthParams {
            plausible_rate: 0.0,
            n_patches: 500,
            ..SynthParams::default()
        };
        let ds = generate_synthetic(3, &p).unwrap();
        assert!(!ds.patches().iter().any(|x| is_plausible(x, &ds)));
    }

    #[test]
    fn large_corpus_validates() {
        let p = SynthParams {
            n_patches: 1000,
            ..SynthParams::default()
        };
        let ds = generate_synthetic(9, &p).unwrap();
        assert!(validate_dataset(&to_raw(&ds)).is_empty());
    }

    #[test]
    fn finer_sets_refine_coarser_ones() {
        let ds = generate_synthetic(1, &SynthParams::default()).unwrap();
        for p in ds.patches() {
            let counts: Vec<usize> = Granularity::ALL.iter().map(|g| p.elements(*g).len()).collect();
            assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
            for m in p.elements(Granularity::Method) {
                assert!(p
                    .elements(Granularity::Class)
                    .iter()
                    .any(|c| m.name.starts_with(&format!("{}.", c.name))));
            }
        }
    }

    #[test]
    fn bad_params() {
        for p in [
            SynthParams { n_tests: 0, ..SynthParams::default() },
            SynthParams { n_failing: 30, ..SynthParams::default() },
            SynthParams { high_rate: 1.5, ..SynthParams::default() },
            SynthParams { plausible_rate: f64::NAN, ..SynthParams::default() },
        ] {
            assert!(matches!(generate_synthetic(0, &p), Err(Error::BadParams(_))));
        }
    }

    #[test]
    fn all_failing_suite_single_test() {
        let p = SynthParams {
            n_tests: 1,
            n_failing: 1,
            high_rate: 1.0,
            ..SynthParams::default()
        };
        let ds = generate_synthetic(2, &p).unwrap();
        assert_eq!(ds.tests().len(), 1);
    }
}
