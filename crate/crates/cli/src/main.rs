//! `patchprio` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input (bad corpus,
//! incompatible configuration, failed validation). Usage errors are reported
//! by clap with exit code 2.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use patchprio::batch::{evaluate, read_manifest, run_batch, run_sweep, BatchOptions, HistoryPool, SweepKind};
use patchprio::dataset::{derive_partial, load_dataset, parse_raw, save_to_string, validate_dataset};
use patchprio::metrics::{aggregate, Target};
use patchprio::report::{render_report, render_sweep, ReportFormat};
use patchprio::scheduler::ReplayTimings;
use patchprio::synth::{generate_synthetic, SynthParams};
use patchprio::{Error, Formula, Granularity, MatrixKind, RunConfig, StopCriterion};

#[derive(Parser)]
#[command(name = "patchprio", version, about = "Replay patch prioritization over recorded validation corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Baseline and prioritized replay of one corpus.
    Replay {
        corpus: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Replay every corpus listed in a manifest and aggregate.
    Batch {
        /// Text file with one corpus path per line, relative to the manifest.
        manifest: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        /// Emit one table per swept configuration value instead of per-bug rows.
        #[arg(long, value_parser = parse_sweep)]
        sweep: Option<SweepKind>,
        /// Worker threads; defaults to all cores.
        #[arg(long, env = "PATCHPRIO_JOBS")]
        jobs: Option<usize>,
    },
    /// Write a seeded synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON object overriding any synthetic parameter.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        patches: Option<usize>,
        #[arg(long)]
        tests: Option<usize>,
        #[arg(long)]
        failing: Option<usize>,
        #[arg(long)]
        element_sets: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a corpus against every dataset invariant.
    Validate { corpus: PathBuf },
    /// Truncate a full-matrix corpus to the partial matrix.
    DerivePartial {
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunFlags {
    #[arg(long, default_value = "ochiai")]
    formula: Formula,
    #[arg(long, default_value = "method")]
    granularity: Granularity,
    #[arg(long, default_value = "partial")]
    matrix: MatrixKind,
    /// Also count shared fix patterns as similarity.
    #[arg(long)]
    plus_plus: bool,
    #[arg(long, default_value = "exhaust")]
    stop: StopCriterion,
    /// Directories with other tools' corpora for the same bugs.
    #[arg(long, num_args = 1..)]
    warm_start: Vec<PathBuf>,
    #[arg(long, default_value = "markdown")]
    report: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print prioritization overhead to stderr.
    #[arg(long)]
    timings: bool,
}

impl RunFlags {
    fn config(&self) -> RunConfig {
        RunConfig {
            formula: self.formula,
            granularity: self.granularity,
            matrix_kind: self.matrix,
            pattern_augmented: self.plus_plus,
            stop: self.stop,
        }
    }
}

fn parse_sweep(s: &str) -> Result<SweepKind, Error> {
    s.parse()
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        2
    } else {
        1
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                })
        }
    }
}

fn print_timings(label: &str, t: &ReplayTimings) {
    eprintln!(
        "timings {label}: setup {:.3} ms, bookkeeping {:.3} ms over {} steps ({:.3} us/step)",
        t.setup.as_secs_f64() * 1e3,
        t.bookkeeping.as_secs_f64() * 1e3,
        t.steps,
        if t.steps == 0 {
            0.0
        } else {
            t.bookkeeping.as_secs_f64() * 1e6 / t.steps as f64
        },
    );
}

fn cmd_replay(corpus: &Path, flags: &RunFlags) -> Result<(), Error> {
    let ds = load_dataset(corpus)?;
    let pool = HistoryPool::load(&flags.warm_start)?;
    let histories = pool.for_bug(ds.bug_id(), ds.tool_id());
    let eval = evaluate(&ds, flags.config(), &histories)?;
    if flags.timings {
        print_timings(ds.bug_id(), &eval.timings);
    }
    let aggs: Vec<_> = [Target::Plausible, Target::Correct]
        .into_iter()
        .map(|t| aggregate(std::slice::from_ref(eval.result(t)), ds.tool_id(), t))
        .collect();
    emit(&render_report(&aggs, flags.report), flags.out.as_deref())
}

/// Returns the exit code: 0 when every corpus ran, otherwise the worst
/// failure class (1 beats 2).
fn cmd_batch(manifest: &Path, flags: &RunFlags, sweep: Option<SweepKind>, jobs: Option<usize>) -> Result<u8, Error> {
    let paths = read_manifest(manifest)?;
    let pool = HistoryPool::load(&flags.warm_start)?;
    let opts = BatchOptions {
        jobs,
        ..BatchOptions::default()
    };
    let (text, failures) = match sweep {
        Some(kind) => {
            let r = run_sweep(&paths, kind, flags.config(), &pool, &opts);
            (render_sweep(&r.tables, flags.report), r.failures)
        }
        None => {
            let r = run_batch(&paths, flags.config(), &pool, &opts);
            if flags.timings {
                for (_, e) in &r.evaluations {
                    print_timings(&e.prioritized.bug_id, &e.timings);
                }
                print_timings("total", &r.total_timings());
            }
            let mut aggs = r.aggregates(Target::Plausible);
            aggs.extend(r.aggregates(Target::Correct));
            (render_report(&aggs, flags.report), r.failures)
        }
    };
    emit(&text, flags.out.as_deref())?;
    for f in &failures {
        match &f.config {
            Some(c) => eprintln!("error: {} [{c}]: {}", f.path.display(), f.error),
            None => eprintln!("error: {}: {}", f.path.display(), f.error),
        }
    }
    if failures.is_empty() {
        return Ok(0);
    }
    eprintln!("{} failure(s) across {} corpora", failures.len(), paths.len());
    Ok(failures.iter().map(|f| exit_code(&f.error)).min().unwrap_or(2))
}

/// A command-line value and the parameter it replaces.
type Override = (Option<usize>, fn(&mut SynthParams) -> &mut usize);

fn cmd_synth(
    seed: u64,
    params_path: Option<&Path>,
    overrides: [Override; 4],
    out: Option<&Path>,
) -> Result<(), Error> {
    let mut params = match params_path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            serde_json::from_str::<SynthParams>(&text).map_err(|e| Error::BadParams(e.to_string()))?
        }
        None => SynthParams::default(),
    };
    for (value, field) in overrides {
        if let Some(v) = value {
            *field(&mut params) = v;
        }
    }
    let ds = generate_synthetic(seed, &params)?;
    emit(&save_to_string(&ds), out)
}

fn cmd_validate(corpus: &Path) -> Result<(), Error> {
    let text = fs::read_to_string(corpus).map_err(|e| Error::Io {
        path: corpus.to_path_buf(),
        source: e,
    })?;
    let raw = parse_raw(&text)?;
    let issues = validate_dataset(&raw);
    for i in &issues {
        println!("{i}");
    }
    println!("{} issues", issues.len());
    if issues.is_empty() {
        Ok(())
    } else {
        Err(Error::Invariant(issues))
    }
}

fn cmd_derive_partial(corpus: &Path, out: Option<&Path>) -> Result<(), Error> {
    let ds = load_dataset(corpus)?;
    emit(&save_to_string(&derive_partial(&ds)?), out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Replay { corpus, run } => cmd_replay(corpus, run),
        Command::Batch {
            manifest,
            run,
            sweep,
            jobs,
        } => match cmd_batch(manifest, run, *sweep, *jobs) {
            Ok(code) => return ExitCode::from(code),
            Err(e) => Err(e),
        },
        Command::Synth {
            seed,
            params,
            patches,
            tests,
            failing,
            element_sets,
            out,
        } => cmd_synth(
            *seed,
            params.as_deref(),
            [
                (*patches, |p| &mut p.n_patches),
                (*tests, |p| &mut p.n_tests),
                (*failing, |p| &mut p.n_failing),
                (*element_sets, |p| &mut p.n_element_sets),
            ],
            out.as_deref(),
        ),
        Command::Validate { corpus } => match cmd_validate(corpus) {
            // Issues are already on stdout.
            Err(Error::Invariant(_)) => return ExitCode::from(2),
            other => other,
        },
        Command::DerivePartial { corpus, out } => cmd_derive_partial(corpus, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
