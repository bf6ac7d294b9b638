use std::fs;
use std::path::PathBuf;

use patchprio::batch::{read_manifest, run_batch, run_sweep, BatchOptions, HistoryPool, SweepKind, OVERALL};
use patchprio::dataset::save_dataset;
use patchprio::fixtures;
use patchprio::metrics::Target;
use patchprio::synth::{generate_synthetic, SynthParams};
use patchprio::{Error, Execution, MatrixKind, RunConfig};
use tempfile::TempDir;

fn corpora(dir: &TempDir) -> Vec<PathBuf> {
    let mut paths = Vec::new();
    for seed in 0..6 {
        let ds = generate_synthetic(seed, &SynthParams::default()).unwrap();
        let p = dir.path().join(format!("s{seed}.jsonl"));
        save_dataset(&ds, &p).unwrap();
        paths.push(p);
    }
    paths
}

fn full() -> RunConfig {
    RunConfig {
        matrix_kind: MatrixKind::Full,
        ..RunConfig::default()
    }
}

#[test]
fn sequential_and_parallel_batches_agree() {
    let dir = TempDir::new().unwrap();
    let paths = corpora(&dir);
    let run = |execution| {
        let r = run_batch(&paths, full(), &HistoryPool::default(), &BatchOptions { execution, jobs: Some(2) });
        assert!(r.failures.is_empty());
        r.aggregates(Target::Plausible)
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}

#[test]
fn manifest_resolves_relative_paths() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("m.txt");
    fs::write(&m, "# header\n a.jsonl \nsub/b.jsonl # trailing\n\n").unwrap();
    assert_eq!(read_manifest(&m).unwrap(), vec![dir.path().join("a.jsonl"), dir.path().join("sub/b.jsonl")]);
    assert!(matches!(read_manifest(dir.path().join("none.txt")), Err(Error::Io { .. })));
}

#[test]
fn matrix_sweep_reports_partial_only_corpus_as_failure() {
    let dir = TempDir::new().unwrap();
    let mut paths = corpora(&dir);
    let partial = dir.path().join("example.jsonl");
    save_dataset(&fixtures::worked_example(), &partial).unwrap();
    paths.push(partial.clone());

    let r = run_sweep(&paths, SweepKind::Matrices, RunConfig::default(), &HistoryPool::default(), &BatchOptions::default());
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.failures[0].path, partial);
    assert_eq!(r.failures[0].config.as_deref(), Some("full"));

    let table = r.tables.iter().find(|t| t.target == Target::Plausible).unwrap();
    assert_eq!(table.columns, ["partial", "full"]);
    let scopes: Vec<_> = table.rows.iter().map(|r| r.scope.as_str()).collect();
    assert_eq!(scopes, ["example-tool", "synth", OVERALL]);
    // The example bug only contributes to the partial column.
    assert_eq!(table.rows[0].reductions, [Some(0.5), None]);
}

#[test]
fn warm_start_pool_loads_directory() {
    let dir = TempDir::new().unwrap();
    let foreign = dir.path().join("foreign");
    fs::create_dir(&foreign).unwrap();
    save_dataset(&fixtures::worked_example_full(), foreign.join("a.jsonl")).unwrap();
    let pool = HistoryPool::load(&[foreign]).unwrap();
    assert_eq!(pool.len(), 1);
    assert!(pool.for_bug("Example-1", "example-tool").is_empty());
    assert_eq!(pool.for_bug("Example-1", "other").len(), 1);
    assert!(matches!(HistoryPool::load(&[dir.path().join("nope")]), Err(Error::Io { .. })));
}
