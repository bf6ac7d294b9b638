//! Set-overlap counts and the incremental similarity-tuple store.
//!
//! Remaining patches with identical element sets (and, with pattern
//! augmentation, identical pattern sets) always carry identical tuples, so the
//! store keeps one tuple per cluster. Each validation then costs one update
//! per live cluster instead of one per remaining patch.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::formulas::{score, Formula, PriorityScore};
use crate::model::{ElementId, Granularity, PatchRecord, PatternId, RunConfig, SimilarityTuple};
use crate::par::{self, Execution};
use crate::quality::Quality;

/// Below this many live clusters the per-step fan-out stays sequential.
const PAR_MIN_CLUSTERS: usize = 512;

/// `|a ∩ b|`
pub fn match_count<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> usize {
    a.intersection(b).count()
}

/// `|(a − b) ∪ (b − a)|`
pub fn differ_count<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> usize {
    a.symmetric_difference(b).count()
}

/// Intersection size of two sorted, deduplicated slices.
fn sorted_match(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[derive(Debug, Clone, Default)]
struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(id) = self.ids.get(name) {
            return *id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    fn set<'a>(&mut self, names: impl IntoIterator<Item = &'a str>) -> Vec<u32> {
        let mut v: Vec<u32> = names.into_iter().map(|n| self.intern(n)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

/// Canonical cluster identity: sorted element names at the run granularity
/// plus sorted pattern names (empty unless pattern augmentation is on).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClusterKey {
    pub elements: Vec<ElementId>,
    pub patterns: Vec<PatternId>,
}

#[derive(Debug, Clone)]
struct Cluster {
    elements: Vec<u32>,
    patterns: Vec<u32>,
    tuple: SimilarityTuple,
    /// Remaining member positions, ascending by original_index.
    members: VecDeque<usize>,
}

impl Cluster {
    fn absorb(&mut self, ev: &Evidence, quality: Quality, with_patterns: bool) {
        let mut matched = sorted_match(&self.elements, &ev.elements);
        let mut differ = (self.elements.len() + ev.elements.len()) as u64 - 2 * matched;
        if with_patterns {
            let pm = sorted_match(&self.patterns, &ev.patterns);
            matched += pm;
            differ += (self.patterns.len() + ev.patterns.len()) as u64 - 2 * pm;
        }
        match quality {
            Quality::High => {
                self.tuple.ef += matched;
                self.tuple.nf += differ;
            }
            Quality::Low => {
                self.tuple.ep += matched;
                self.tuple.np += differ;
            }
        }
    }
}

/// Element (and pattern) sets of a validated patch, interned against a store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    elements: Vec<u32>,
    patterns: Vec<u32>,
}

/// Read-only view of one live cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterView {
    pub key: ClusterKey,
    pub tuple: SimilarityTuple,
    /// Positions (into the dataset's patch list) of the remaining members.
    pub members: Vec<usize>,
}

/// The patch chosen by [`TupleStore::pop_highest`].
#[derive(Debug, Clone, PartialEq)]
pub struct Popped {
    pub position: usize,
    pub score: PriorityScore,
    pub tuple: SimilarityTuple,
    /// The popped patch's own sets, ready to feed back into [`TupleStore::update`].
    pub evidence: Evidence,
}

/// Per-cluster similarity tuples over the remaining patches of one replay.
#[derive(Debug, Clone)]
pub struct TupleStore {
    granularity: Granularity,
    pattern_augmented: bool,
    execution: Execution,
    elements: Interner,
    patterns: Interner,
    clusters: Vec<Cluster>,
    cluster_of: Vec<usize>,
    original_index: Vec<usize>,
    alive: Vec<bool>,
    remaining: usize,
}

/// Groups `patches` by cluster key with all tuples at (1,1,1,1).
pub fn cluster_patches(patches: &[PatchRecord], cfg: &RunConfig) -> TupleStore {
    let mut elements = Interner::default();
    let mut patterns = Interner::default();
    let mut lookup: HashMap<(Vec<u32>, Vec<u32>), usize> = HashMap::new();
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut cluster_of = Vec::with_capacity(patches.len());

    let mut order: Vec<usize> = (0..patches.len()).collect();
    order.sort_by_key(|&i| patches[i].original_index);
    cluster_of.resize(patches.len(), 0);

    for pos in order {
        let p = &patches[pos];
        let e = elements.set(p.elements(cfg.granularity).iter().map(|e| e.name.as_str()));
        let r = if cfg.pattern_augmented {
            patterns.set(p.patterns.iter().map(PatternId::as_str))
        } else {
            Vec::new()
        };
        let idx = *lookup.entry((e.clone(), r.clone())).or_insert_with(|| {
            clusters.push(Cluster {
                elements: e,
                patterns: r,
                tuple: SimilarityTuple::INITIAL,
                members: VecDeque::new(),
            });
            clusters.len() - 1
        });
        clusters[idx].members.push_back(pos);
        cluster_of[pos] = idx;
    }

    TupleStore {
        granularity: cfg.granularity,
        pattern_augmented: cfg.pattern_augmented,
        execution: Execution::default(),
        elements,
        patterns,
        clusters,
        cluster_of,
        original_index: patches.iter().map(|p| p.original_index).collect(),
        alive: vec![true; patches.len()],
        remaining: patches.len(),
    }
}

/// Folds one validated patch into every remaining cluster.
pub fn update_tuples(store: &mut TupleStore, executed: &PatchRecord, quality: Quality) {
    let ev = store.evidence_from_record(executed);
    store.update(&ev, quality);
}

impl TupleStore {
    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn pattern_augmented(&self) -> bool {
        self.pattern_augmented
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn is_empty(&self) -> bool {
        self.remaining == 0
    }

    /// Number of clusters with at least one remaining member.
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn evidence_from_record(&mut self, patch: &PatchRecord) -> Evidence {
        self.evidence_from_names(
            patch.elements(self.granularity).iter().map(|e| e.name.as_str()),
            patch.patterns.iter().map(PatternId::as_str),
        )
    }

    pub fn evidence_from_names<'a>(
        &mut self,
        elements: impl IntoIterator<Item = &'a str>,
        patterns: impl IntoIterator<Item = &'a str>,
    ) -> Evidence {
        let elements = self.elements.set(elements);
        let patterns = if self.pattern_augmented {
            self.patterns.set(patterns)
        } else {
            Vec::new()
        };
        Evidence { elements, patterns }
    }

    /// Adds the match/differ counts against `ev` to every remaining cluster:
    /// into (ef, nf) for a high-quality patch, (ep, np) for a low-quality one.
    pub fn update(&mut self, ev: &Evidence, quality: Quality) {
        let with_patterns = self.pattern_augmented;
        let exec = if self.clusters.len() >= PAR_MIN_CLUSTERS {
            self.execution
        } else {
            Execution::Sequential
        };
        par::for_each_mut(exec, &mut self.clusters, |c| c.absorb(ev, quality, with_patterns));
    }

    fn live_cluster(&self, position: usize) -> Option<&Cluster> {
        if !*self.alive.get(position)? {
            return None;
        }
        self.clusters.get(self.cluster_of[position])
    }

    /// Tuple of a remaining patch; `None` once it has been popped.
    pub fn tuple_of(&self, position: usize) -> Option<SimilarityTuple> {
        self.live_cluster(position).map(|c| c.tuple)
    }

    pub fn score_of(&self, position: usize, formula: Formula) -> Option<PriorityScore> {
        self.tuple_of(position).map(|t| score(formula, t))
    }

    pub fn clusters(&self) -> Vec<ClusterView> {
        self.clusters
            .iter()
            .map(|c| ClusterView {
                key: ClusterKey {
                    elements: c
                        .elements
                        .iter()
                        .map(|&id| ElementId::new(self.granularity, self.elements.name(id)))
                        .collect(),
                    patterns: c
                        .patterns
                        .iter()
                        .map(|&id| PatternId::new(self.patterns.name(id)))
                        .collect(),
                },
                tuple: c.tuple,
                members: c.members.iter().copied().collect(),
            })
            .collect()
    }

    /// Removes and returns the remaining patch with the highest score; ties
    /// go to the smallest original index.
    pub fn pop_highest(&mut self, formula: Formula) -> Result<Popped> {
        let mut best: Option<(usize, PriorityScore, usize)> = None;
        for (ci, c) in self.clusters.iter().enumerate() {
            let Some(&front) = c.members.front() else {
                continue;
            };
            let s = score(formula, c.tuple);
            let oi = self.original_index[front];
            let better = match best {
                None => true,
                Some((_, bs, boi)) => s > bs || (s == bs && oi < boi),
            };
            if better {
                best = Some((ci, s, oi));
            }
        }
        let (ci, s, _) = best.ok_or(Error::EmptyPool)?;
        let cluster = &mut self.clusters[ci];
        let position = cluster.members.pop_front().ok_or(Error::EmptyPool)?;
        let tuple = cluster.tuple;
        let evidence = Evidence {
            elements: cluster.elements.clone(),
            patterns: cluster.patterns.clone(),
        };
        self.alive[position] = false;
        self.remaining -= 1;
        if cluster.members.is_empty() {
            self.clusters.swap_remove(ci);
            if let Some(moved) = self.clusters.get(ci) {
                for &m in &moved.members {
                    self.cluster_of[m] = ci;
                }
            }
        }
        Ok(Popped {
            position,
            score: s,
            tuple,
            evidence,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn example_match_and_differ() {
        let p1 = set(&["e1", "e2", "e3"]);
        let p2 = set(&["e1", "e2", "e3", "e4"]);
        assert_eq!(match_count(&p1, &p2), 3);
        assert_eq!(differ_count(&p1, &p2), 1);
        assert_eq!(match_count(&p1, &BTreeSet::new()), 0);
        assert_eq!(differ_count(&p1, &p1), 0);
    }

    #[test]
    fn example_tuple_updates() {
        let ds = fixtures::worked_example();
        let cfg = RunConfig::default();
        let mut store = cluster_patches(ds.patches(), &cfg);
        assert_eq!(store.cluster_count(), 4);

        let popped = store.pop_highest(cfg.formula).unwrap();
        assert_eq!(popped.position, 0);
        update_tuples(&mut store, &ds.patches()[0], Quality::Low);
        assert_eq!(store.tuple_of(1), Some(SimilarityTuple::new(1, 1, 4, 2)));
        assert_eq!(store.tuple_of(2), Some(SimilarityTuple::new(1, 1, 3, 2)));
        assert_eq!(store.tuple_of(3), Some(SimilarityTuple::new(1, 1, 2, 3)));

        let popped = store.pop_highest(cfg.formula).unwrap();
        assert_eq!(popped.position, 3);
        update_tuples(&mut store, &ds.patches()[3], Quality::High);
        assert_eq!(store.tuple_of(1), Some(SimilarityTuple::new(2, 4, 4, 2)));
        assert_eq!(store.tuple_of(3), None);
    }

    #[test]
    fn disjoint_equal_size_only_grows_differ() {
        let ds = fixtures::worked_example();
        let mut store = cluster_patches(&ds.patches()[3..], &RunConfig::default());
        let ev = store.evidence_from_names(["zz"], []);
        store.update(&ev, Quality::High);
        assert_eq!(store.tuple_of(0), Some(SimilarityTuple::new(1, 3, 1, 1)));
        store.update(&ev, Quality::Low);
        assert_eq!(store.tuple_of(0), Some(SimilarityTuple::new(1, 3, 1, 3)));
    }

    #[test]
    fn identical_sets_share_one_cluster() {
        let ds = fixtures::worked_example();
        let mut patches = Vec::new();
        for i in 0..6 {
            let mut p = ds.patches()[0].clone();
            p.patch_id = format!("q{i}");
            p.original_index = 10 - i;
            patches.push(p);
        }
        let store = cluster_patches(&patches, &RunConfig::default());
        assert_eq!(store.cluster_count(), 1);
        let members = &store.clusters()[0].members;
        let idx: Vec<_> = members.iter().map(|&m| patches[m].original_index).collect();
        assert_eq!(idx, [5, 6, 7, 8, 9, 10]);
    }

    #[test]
    fn pattern_key_splits_clusters_only_in_plus_plus_mode() {
        let ds = fixtures::worked_example();
        let mut a = ds.patches()[0].clone();
        let mut b = a.clone();
        b.patch_id = "b".into();
        b.original_index = 1;
        b.patterns = [PatternId::new("other")].into_iter().collect();
        a.original_index = 0;
        let plain = cluster_patches(&[a.clone(), b.clone()], &RunConfig::default());
        assert_eq!(plain.cluster_count(), 1);
        let cfg = RunConfig {
            pattern_augmented: true,
            ..RunConfig::default()
        };
        let pp = cluster_patches(&[a, b], &cfg);
        assert_eq!(pp.cluster_count(), 2);
    }

    #[test]
    fn tie_break_prefers_lower_original_index() {
        let ds = fixtures::worked_example();
        let mut store = cluster_patches(ds.patches(), &RunConfig::default());
        let order: Vec<_> = (0..4)
            .map(|_| store.pop_highest(Formula::Ochiai).unwrap().position)
            .collect();
        assert_eq!(order, [0, 1, 2, 3]);
        assert!(matches!(store.pop_highest(Formula::Ochiai), Err(Error::EmptyPool)));
    }

    fn brute_match(a: &[u32], b: &[u32]) -> usize {
        let mut n = 0;
        for x in a {
            for y in b {
                if x == y {
                    n += 1;
                }
            }
        }
        n
    }

    proptest! {
        #[test]
        fn match_count_equals_brute_force(a in prop::collection::btree_set(0u32..60, 0..30),
                                          b in prop::collection::btree_set(0u32..60, 0..30)) {
            let av: Vec<u32> = a.iter().copied().collect();
            let bv: Vec<u32> = b.iter().copied().collect();
            let m = match_count(&a, &b);
            prop_assert_eq!(m, brute_match(&av, &bv));
            prop_assert_eq!(sorted_match(&av, &bv) as usize, m);
            prop_assert_eq!(differ_count(&a, &b), a.len() + b.len() - 2 * m);
            prop_assert_eq!(match_count(&a, &b), match_count(&b, &a));
            prop_assert_eq!(differ_count(&a, &b), differ_count(&b, &a));
            prop_assert_eq!(match_count(&a, &a), a.len());
        }
    }
}
