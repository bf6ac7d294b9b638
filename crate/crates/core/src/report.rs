//! Text rendering of aggregates and configuration sweeps.
//!
//! Output is deterministic. Absent positions render as `---`; reductions are
//! percentages with two decimals in CSV and Markdown and raw ratios in JSON.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{AggregateResult, Target};

pub const CSV_HEADER: &str = "scope,bug_id,target,p_baseline,p_new,reduction,displacement";
const ABSENT: &str = "---";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

pub fn percent(r: f64) -> String {
    format!("{:.2}%", r * 100.0)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| ABSENT.to_string(), |v| v.to_string())
}

fn opt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| ABSENT.to_string(), percent)
}

fn opt_f2(v: Option<f64>) -> String {
    v.map_or_else(|| ABSENT.to_string(), |v| format!("{v:.2}"))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_report(aggs: &[AggregateResult], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(aggs),
        ReportFormat::Markdown => render_markdown(aggs),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(aggs).expect("aggregates serialize");
            s.push('\n');
            s
        }
    }
}

fn render_csv(aggs: &[AggregateResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for a in aggs {
        let scope = csv_field(&a.scope);
        for b in &a.bugs {
            let _ = writeln!(
                out,
                "{scope},{},{},{},{},{},{}",
                csv_field(&b.bug_id),
                b.target,
                opt(b.p_baseline),
                opt(b.p_new),
                opt_pct(b.reduction),
                opt(b.displacement),
            );
        }
        if !a.bugs.is_empty() {
            let included = a.included > 0;
            let _ = writeln!(
                out,
                "{scope},Overall,{},{},{},{},{}",
                a.target,
                opt(included.then_some(a.sum_baseline)),
                opt(included.then_some(a.sum_new)),
                opt_pct(a.overall_reduction),
                opt_f2(a.avg_displacement),
            );
        }
    }
    out
}

fn render_markdown(aggs: &[AggregateResult]) -> String {
    let mut out = String::new();
    out.push_str("| Scope | Bug | Target | P_baseline | P_new | Reduction | ΔP |\n");
    out.push_str("|---|---|---|---:|---:|---:|---:|\n");
    for a in aggs {
        for b in &a.bugs {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} |",
                a.scope,
                b.bug_id,
                b.target,
                opt(b.p_baseline),
                opt(b.p_new),
                opt_pct(b.reduction),
                opt(b.displacement),
            );
        }
    }
    out.push('\n');
    out.push_str(
        "| Scope | Target | Included | ΣP_baseline | ΣP_new | Reduction | Better | Worse | Avg ΔP |\n",
    );
    out.push_str("|---|---|---:|---:|---:|---:|---:|---:|---:|\n");
    for a in aggs.iter().filter(|a| !a.bugs.is_empty()) {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            a.scope,
            a.target,
            a.included,
            a.sum_baseline,
            a.sum_new,
            opt_pct(a.overall_reduction),
            a.count_better,
            a.count_worse,
            opt_f2(a.avg_displacement),
        );
    }
    out
}

/// Overall reduction per scope (rows) and configuration value (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub sweep: String,
    pub target: Target,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scope: String,
    pub reductions: Vec<Option<f64>>,
}

pub fn render_sweep(tables: &[SweepTable], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Json => {
            out = serde_json::to_string_pretty(tables).expect("sweep serializes");
            out.push('\n');
        }
        ReportFormat::Csv => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "sweep,target,scope,{}", t.columns.join(","));
                for r in &t.rows {
                    let cells: Vec<String> = r.reductions.iter().map(|v| opt_pct(*v)).collect();
                    let _ = writeln!(out, "{},{},{},{}", t.sweep, t.target, csv_field(&r.scope), cells.join(","));
                }
            }
        }
        ReportFormat::Markdown => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "{} sweep, first {} patch\n", t.sweep, t.target);
                let _ = writeln!(out, "| Scope | {} |", t.columns.join(" | "));
                let _ = writeln!(out, "|---|{}", "---:|".repeat(t.columns.len()));
                for r in &t.rows {
                    let cells: Vec<String> = r.reductions.iter().map(|v| opt_pct(*v)).collect();
                    let _ = writeln!(out, "| {} | {} |", r.scope, cells.join(" | "));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{aggregate, BugResult};

    fn example() -> Vec<AggregateResult> {
        let rs = [BugResult::new("Example-1", "example-tool", Target::Plausible, Some(4), Some(2))];
        vec![aggregate(&rs, "example-tool", Target::Plausible)]
    }

    #[test]
    fn markdown_shows_fifty_percent() {
        let md = render_report(&example(), ReportFormat::Markdown);
        assert!(md.contains("| example-tool | Example-1 | plausible | 4 | 2 | 50.00% | -2 |"), "{md}");
        assert!(md.contains("50.00%"));
    }

    #[test]
    fn csv_layout() {
        let csv = render_report(&example(), ReportFormat::Csv);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "example-tool,Example-1,plausible,4,2,50.00%,-2");
        assert_eq!(lines[2], "example-tool,Overall,plausible,4,2,50.00%,-2.00");
    }

    #[test]
    fn absent_positions_render_dashes() {
        let rs = [BugResult::new("b", "t", Target::Correct, None, Some(3))];
        let aggs = vec![aggregate(&rs, "t", Target::Correct)];
        let csv = render_report(&aggs, ReportFormat::Csv);
        assert!(csv.contains("t,b,correct,---,3,---,---"), "{csv}");
    }

    #[test]
    fn empty_pool_is_header_only() {
        let aggs = vec![aggregate(&[], "none", Target::Plausible)];
        assert_eq!(render_report(&aggs, ReportFormat::Csv), format!("{CSV_HEADER}\n"));
        let md = render_report(&aggs, ReportFormat::Markdown);
        assert_eq!(md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Scope")).count(), 0);
    }

    #[test]
    fn json_round_trip() {
        let aggs = example();
        let text = render_report(&aggs, ReportFormat::Json);
        let back: Vec<AggregateResult> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, aggs);
    }

    #[test]
    fn unknown_format() {
        assert!(matches!("xml".parse::<ReportFormat>(), Err(Error::UnknownFormat(_))));
    }

    #[test]
    fn sweep_markdown_has_one_column_per_value() {
        let t = SweepTable {
            sweep: "formula".into(),
            target: Target::Plausible,
            columns: vec!["A".into(), "B".into()],
            rows: vec![SweepRow {
                scope: "Overall".into(),
                reductions: vec![Some(0.5), None],
            }],
        };
        let md = render_sweep(&[t], ReportFormat::Markdown);
        assert!(md.contains("| Scope | A | B |"));
        assert!(md.contains("| Overall | 50.00% | --- |"));
    }
}
