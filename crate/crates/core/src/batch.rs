//! Multi-corpus experiments: per-bug evaluation, warm-start discovery,
//! aggregation per tool and configuration sweeps.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::load_dataset;
use crate::error::{Error, Result};
use crate::formulas::Formula;
use crate::metrics::{aggregate, AggregateResult, BugResult, Target};
use crate::model::{BugDataset, Granularity, MatrixKind, RunConfig};
use crate::par::{self, Execution};
use crate::report::{SweepRow, SweepTable};
use crate::scheduler::{run_baseline, ReplayTimings, Replay, Schedule, WarmStartHistory};

pub const OVERALL: &str = "Overall";

/// Baseline and prioritized runs of one corpus under one configuration.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub baseline: Schedule,
    pub prioritized: Schedule,
    pub plausible: BugResult,
    pub correct: BugResult,
    pub timings: ReplayTimings,
}

impl Evaluation {
    pub fn result(&self, target: Target) -> &BugResult {
        match target {
            Target::Plausible => &self.plausible,
            Target::Correct => &self.correct,
        }
    }
}

pub fn evaluate(ds: &BugDataset, cfg: RunConfig, histories: &[WarmStartHistory]) -> Result<Evaluation> {
    evaluate_with(ds, cfg, histories, Execution::default())
}

pub fn evaluate_with(
    ds: &BugDataset,
    cfg: RunConfig,
    histories: &[WarmStartHistory],
    execution: Execution,
) -> Result<Evaluation> {
    let (prioritized, timings) = Replay::new(ds, cfg, histories)?.with_execution(execution).run();
    let baseline = run_baseline(ds);
    Ok(Evaluation {
        plausible: BugResult::from_schedules(&baseline, &prioritized, Target::Plausible),
        correct: BugResult::from_schedules(&baseline, &prioritized, Target::Correct),
        baseline,
        prioritized,
        timings,
    })
}

/// Corpus paths listed in a manifest: one per line, relative to the
/// manifest's directory, `#` starts a comment.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| base.join(l))
        .collect())
}

/// Foreign pools found under warm-start directories, already reduced to
/// validated histories.
#[derive(Debug, Clone, Default)]
pub struct HistoryPool {
    histories: Vec<WarmStartHistory>,
}

impl HistoryPool {
    /// Loads every regular file in each directory (sorted by name) as a
    /// corpus. A directory path that is itself a file is loaded directly.
    pub fn load(dirs: &[PathBuf]) -> Result<Self> {
        let mut histories = Vec::new();
        for dir in dirs {
            let files = if dir.is_file() {
                vec![dir.clone()]
            } else {
                let mut files = Vec::new();
                for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
                    let p = entry.map_err(|e| Error::io(dir, e))?.path();
                    if p.is_file() {
                        files.push(p);
                    }
                }
                files.sort();
                files
            };
            for f in files {
                histories.push(WarmStartHistory::from_dataset(&load_dataset(&f)?));
            }
        }
        Ok(HistoryPool { histories })
    }

    pub fn from_histories(histories: Vec<WarmStartHistory>) -> Self {
        HistoryPool { histories }
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    /// Histories of other tools on the same bug.
    pub fn for_bug(&self, bug_id: &str, tool_id: &str) -> Vec<WarmStartHistory> {
        self.histories
            .iter()
            .filter(|h| h.bug_id == bug_id && h.source_tool != tool_id)
            .cloned()
            .collect()
    }
}

/// A corpus that could not be loaded or replayed.
#[derive(Debug)]
pub struct Failure {
    pub path: PathBuf,
    pub config: Option<String>,
    pub error: Error,
}

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    pub execution: Execution,
    pub jobs: Option<usize>,
}

fn load_all(paths: &[PathBuf], opts: &BatchOptions) -> Vec<Result<BugDataset>> {
    par::with_jobs(opts.jobs, || par::map(opts.execution, paths, |p| load_dataset(p)))
}

/// Evaluations of every loaded corpus under each configuration; entry
/// `[c][i]` is configuration `c` on corpus `i`.
fn evaluate_grid(
    datasets: &[&BugDataset],
    configs: &[RunConfig],
    pool: &HistoryPool,
    opts: &BatchOptions,
) -> Vec<Vec<Result<Evaluation>>> {
    let cells: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..datasets.len()).map(move |i| (c, i)))
        .collect();
    // Batch-level fan-out already saturates the pool; keep replays sequential.
    let inner = if opts.execution.is_parallel() {
        Execution::Sequential
    } else {
        opts.execution
    };
    let flat = par::with_jobs(opts.jobs, || {
        par::map(opts.execution, &cells, |&(c, i)| {
            let ds = datasets[i];
            let histories = pool.for_bug(ds.bug_id(), ds.tool_id());
            evaluate_with(ds, configs[c], &histories, inner)
        })
    });
    let mut grid: Vec<Vec<Result<Evaluation>>> = configs.iter().map(|_| Vec::new()).collect();
    for ((c, _), r) in cells.into_iter().zip(flat) {
        grid[c].push(r);
    }
    grid
}

/// Per-tool aggregates (tools sorted by name) followed by the overall one.
pub fn aggregate_by_tool(results: &[BugResult], target: Target) -> Vec<AggregateResult> {
    let mut by_tool: BTreeMap<&str, Vec<BugResult>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.target == target) {
        by_tool.entry(r.tool_id.as_str()).or_default().push(r.clone());
    }
    let mut out: Vec<AggregateResult> = by_tool
        .iter()
        .map(|(tool, rs)| aggregate(rs, *tool, target))
        .collect();
    out.push(aggregate(results, OVERALL, target));
    out
}

#[derive(Debug)]
pub struct BatchReport {
    pub corpora: Vec<PathBuf>,
    pub evaluations: Vec<(PathBuf, Evaluation)>,
    pub failures: Vec<Failure>,
}

impl BatchReport {
    pub fn results(&self, target: Target) -> Vec<BugResult> {
        self.evaluations.iter().map(|(_, e)| e.result(target).clone()).collect()
    }

    pub fn aggregates(&self, target: Target) -> Vec<AggregateResult> {
        aggregate_by_tool(&self.results(target), target)
    }

    pub fn total_timings(&self) -> ReplayTimings {
        let mut t = ReplayTimings::default();
        for (_, e) in &self.evaluations {
            t.setup += e.timings.setup;
            t.bookkeeping += e.timings.bookkeeping;
            t.steps += e.timings.steps;
        }
        t
    }
}

/// Loads and evaluates every corpus. Failures are collected, never fatal.
pub fn run_batch(
    paths: &[PathBuf],
    cfg: RunConfig,
    pool: &HistoryPool,
    opts: &BatchOptions,
) -> BatchReport {
    let mut failures = Vec::new();
    let mut loaded = Vec::new();
    for (p, r) in paths.iter().zip(load_all(paths, opts)) {
        match r {
            Ok(ds) => loaded.push((p.clone(), ds)),
            Err(error) => failures.push(Failure {
                path: p.clone(),
                config: None,
                error,
            }),
        }
    }
    let refs: Vec<&BugDataset> = loaded.iter().map(|(_, d)| d).collect();
    let mut grid = evaluate_grid(&refs, &[cfg], pool, opts);
    let mut evaluations = Vec::new();
    for ((p, _), r) in loaded.iter().zip(grid.remove(0)) {
        match r {
            Ok(e) => evaluations.push((p.clone(), e)),
            Err(error) => failures.push(Failure {
                path: p.clone(),
                config: None,
                error,
            }),
        }
    }
    failures.sort_by(|a, b| a.path.cmp(&b.path));
    BatchReport {
        corpora: paths.to_vec(),
        evaluations,
        failures,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Formulas,
    Granularities,
    Matrices,
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "formulas" | "formula" => Ok(SweepKind::Formulas),
            "granularities" | "granularity" => Ok(SweepKind::Granularities),
            "matrices" | "matrix" => Ok(SweepKind::Matrices),
            _ => Err(Error::BadParams(format!("unknown sweep `{s}`"))),
        }
    }
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::Formulas => "formulas",
            SweepKind::Granularities => "granularities",
            SweepKind::Matrices => "matrices",
        }
    }

    /// Column labels and configurations, each derived from `base`.
    pub fn configs(self, base: RunConfig) -> Vec<(String, RunConfig)> {
        match self {
            SweepKind::Formulas => Formula::ALL
                .iter()
                .map(|&formula| (formula.name().to_string(), RunConfig { formula, ..base }))
                .collect(),
            SweepKind::Granularities => Granularity::ALL
                .iter()
                .map(|&granularity| (granularity.as_str().to_string(), RunConfig { granularity, ..base }))
                .collect(),
            SweepKind::Matrices => [MatrixKind::Partial, MatrixKind::Full]
                .iter()
                .map(|&matrix_kind| (matrix_kind.as_str().to_string(), RunConfig { matrix_kind, ..base }))
                .collect(),
        }
    }
}

#[derive(Debug)]
pub struct SweepReport {
    pub tables: Vec<SweepTable>,
    pub failures: Vec<Failure>,
}

/// One table per target: rows are tools plus the overall scope, columns the
/// swept values, cells the overall reduction of that scope.
pub fn run_sweep(
    paths: &[PathBuf],
    kind: SweepKind,
    base: RunConfig,
    pool: &HistoryPool,
    opts: &BatchOptions,
) -> SweepReport {
    let mut failures = Vec::new();
    let mut loaded = Vec::new();
    for (p, r) in paths.iter().zip(load_all(paths, opts)) {
        match r {
            Ok(ds) => loaded.push((p.clone(), ds)),
            Err(error) => failures.push(Failure {
                path: p.clone(),
                config: None,
                error,
            }),
        }
    }
    let (labels, configs): (Vec<String>, Vec<RunConfig>) = kind.configs(base).into_iter().unzip();
    let refs: Vec<&BugDataset> = loaded.iter().map(|(_, d)| d).collect();
    let grid = evaluate_grid(&refs, &configs, pool, opts);

    let mut per_column: Vec<Vec<&Evaluation>> = Vec::new();
    for (label, column) in labels.iter().zip(&grid) {
        let mut ok = Vec::new();
        for ((p, _), r) in loaded.iter().zip(column) {
            match r {
                Ok(e) => ok.push(e),
                Err(error) => failures.push(Failure {
                    path: p.clone(),
                    config: Some(label.clone()),
                    error: clone_error(error),
                }),
            }
        }
        per_column.push(ok);
    }

    let mut tools: Vec<&str> = loaded.iter().map(|(_, d)| d.tool_id()).collect();
    tools.sort_unstable();
    tools.dedup();

    let tables = [Target::Plausible, Target::Correct]
        .into_iter()
        .map(|target| {
            let columns: Vec<Vec<AggregateResult>> = per_column
                .iter()
                .map(|evals| {
                    let rs: Vec<BugResult> = evals.iter().map(|e| e.result(target).clone()).collect();
                    aggregate_by_tool(&rs, target)
                })
                .collect();
            let scopes = tools.iter().copied().chain(std::iter::once(OVERALL));
            let rows = scopes
                .map(|scope| SweepRow {
                    scope: scope.to_string(),
                    reductions: columns
                        .iter()
                        .map(|aggs| {
                            aggs.iter()
                                .rev()
                                .find(|a| a.scope == scope)
                                .and_then(|a| a.overall_reduction)
                        })
                        .collect(),
                })
                .collect();
            SweepTable {
                sweep: kind.as_str().to_string(),
                target,
                columns: labels.clone(),
                rows,
            }
        })
        .collect();
    failures.sort_by(|a, b| (&a.path, &a.config).cmp(&(&b.path, &b.config)));
    SweepReport { tables, failures }
}

// Error is not Clone (it wraps io::Error); sweeps only need the message and
// the exit-code class.
fn clone_error(e: &Error) -> Error {
    match e {
        Error::Io { path, source } => Error::Io {
            path: path.clone(),
            source: std::io::Error::new(source.kind(), source.to_string()),
        },
        Error::IncompatibleMatrix { wanted, found } => Error::IncompatibleMatrix {
            wanted: *wanted,
            found: *found,
        },
        other => Error::BadParams(other.to_string()),
    }
}
