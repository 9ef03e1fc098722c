use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::results::{ground_truths, read_results};
use super::run::RunSummary;
use super::{HarnessError, SUMMARY_FILE};
use crate::backends::ClassificationOutcome;
use crate::labels::LabelSet;
use crate::metrics::{compute_confusion, compute_metrics};
use crate::resources::{aggregate_times, PowerProfile};

/// Values closer than this compare as unchanged.
const UNCHANGED_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TableText,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table_text" | "text" | "table" => Ok(ReportFormat::TableText),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!(
                "unknown report format `{other}` (table_text or csv)"
            )),
        }
    }
}

/// Headline numbers for one results file, re-scored from its rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub run_id: String,
    pub source: PathBuf,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub avg_confidence: Option<f64>,
    pub avg_exec_time_s: f64,
    pub avg_energy_wh: f64,
    /// Needs the run summary's power profile.
    pub total_co2_g: Option<f64>,
    /// `None` when no summary is available.
    pub filter_applied: Option<bool>,
}

pub fn load_run(results_path: &Path) -> Result<RunRow, HarnessError> {
    let rows = read_results(results_path)?;
    if rows.is_empty() {
        return Err(HarnessError::Schema {
            path: results_path.to_path_buf(),
            reason: "results file has no rows".into(),
        });
    }
    let summary_path = results_path.with_file_name(SUMMARY_FILE);
    let summary = if summary_path.is_file() {
        Some(RunSummary::load(&summary_path)?)
    } else {
        None
    };
    let schema = |reason: String| HarnessError::Schema {
        path: results_path.to_path_buf(),
        reason,
    };

    let labels = match &summary {
        Some(s) => LabelSet::new(s.label_set.clone()),
        None => {
            let mut seen: Vec<String> = Vec::new();
            for r in &rows {
                if !seen
                    .iter()
                    .any(|l| crate::labels::labels_match(l, &r.ground_truth))
                {
                    seen.push(r.ground_truth.clone());
                }
            }
            LabelSet::new(seen)
        }
    }
    .map_err(|e| schema(e.to_string()))?;

    let truths = ground_truths(&rows);
    let outcomes: Vec<ClassificationOutcome> = rows.iter().map(|r| r.to_outcome()).collect();
    let cm = compute_confusion(&outcomes, &truths, &labels)?;
    let metrics = compute_metrics(&cm, &outcomes)?;
    let profile: Option<&PowerProfile> = summary.as_ref().map(|s| &s.config.power_profile);
    let (avg_energy_wh, total_co2_g) = match profile {
        Some(p) => {
            let r = aggregate_times(rows.iter().map(|r| r.execution_time_s), p)?;
            (r.avg_energy_wh, Some(r.total_co2_g))
        }
        None => (
            rows.iter().map(|r| r.energy_wh).sum::<f64>() / rows.len() as f64,
            None,
        ),
    };
    Ok(RunRow {
        run_id: rows[0].run_id.clone(),
        source: results_path.to_path_buf(),
        accuracy: metrics.accuracy,
        macro_f1: metrics.macro_f1,
        avg_confidence: metrics.avg_confidence,
        avg_exec_time_s: metrics.avg_exec_time_s,
        avg_energy_wh,
        total_co2_g,
        filter_applied: summary.map(|s| s.filter_applied),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Change {
    Increased,
    Decreased,
    Unchanged,
}

impl Change {
    pub fn arrow(self) -> &'static str {
        match self {
            Change::Increased => "↑",
            Change::Decreased => "↓",
            Change::Unchanged => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Improved,
    Worsened,
    Unchanged,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Improved => "improved",
            Verdict::Worsened => "worsened",
            Verdict::Unchanged => "unchanged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub metric: &'static str,
    pub without_filter: Option<f64>,
    pub with_filter: Option<f64>,
    pub change: Option<Change>,
    pub verdict: Option<Verdict>,
}

fn compare(
    metric: &'static str,
    a: Option<f64>,
    b: Option<f64>,
    higher_is_better: bool,
) -> Comparison {
    let change = match (a, b) {
        (Some(a), Some(b)) if (b - a).abs() <= UNCHANGED_TOLERANCE => Some(Change::Unchanged),
        (Some(a), Some(b)) if b > a => Some(Change::Increased),
        (Some(_), Some(_)) => Some(Change::Decreased),
        _ => None,
    };
    let verdict = change.map(|c| match (c, higher_is_better) {
        (Change::Unchanged, _) => Verdict::Unchanged,
        (Change::Increased, true) | (Change::Decreased, false) => Verdict::Improved,
        _ => Verdict::Worsened,
    });
    Comparison {
        metric,
        without_filter: a,
        with_filter: b,
        change,
        verdict,
    }
}

/// Metric-by-metric comparison of a run without (`a`) and with (`b`) filtering.
pub fn compare_runs(a: &RunRow, b: &RunRow) -> Vec<Comparison> {
    vec![
        compare("Accuracy", Some(a.accuracy), Some(b.accuracy), true),
        compare("Macro-F1", Some(a.macro_f1), Some(b.macro_f1), true),
        compare("Avg. CS", a.avg_confidence, b.avg_confidence, true),
        compare(
            "Avg. Exec. Time",
            Some(a.avg_exec_time_s),
            Some(b.avg_exec_time_s),
            false,
        ),
        compare(
            "Avg. Energy",
            Some(a.avg_energy_wh),
            Some(b.avg_energy_wh),
            false,
        ),
        compare("Total CO₂", a.total_co2_g, b.total_co2_g, false),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub runs: Vec<RunRow>,
    pub comparison: Option<Vec<Comparison>>,
    pub rendered: String,
}

const RUN_COLUMNS: [&str; 7] = [
    "Run",
    "Accuracy",
    "Macro-F1",
    "Avg. CS",
    "Avg. Exec. Time",
    "Avg. Energy",
    "Total CO₂",
];

fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map(f).unwrap_or_else(|| "n/a".into())
}

fn format_metric(metric: &str, v: Option<f64>) -> String {
    opt(v, |x| match metric {
        "Accuracy" => format!("{:.2}%", x * 100.0),
        "Avg. Exec. Time" => format!("{x:.2} s"),
        "Avg. Energy" => format!("{x:.4} Wh"),
        "Total CO₂" => format!("{x:.4} g"),
        _ => format!("{x:.4}"),
    })
}

fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            rows.iter()
                .map(|r| r[i].chars().count())
                .chain([header[i].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: Vec<&str>| {
        let mut out = String::new();
        for (i, c) in cells.iter().enumerate() {
            let pad = widths[i] - c.chars().count();
            out.push_str(c);
            if i + 1 < cells.len() {
                out.push_str(&" ".repeat(pad + 2));
            }
        }
        out.push('\n');
        out
    };
    let mut out = line(header.to_vec());
    out.push_str(&line(
        widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect(),
    ));
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String, HarnessError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| HarnessError::Config(e.to_string());
    writer.write_record(header).map_err(wrap)?;
    for r in rows {
        writer.write_record(r).map_err(wrap)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Per-run table, plus a with/without-filtering comparison when `ab` is set
/// and exactly two runs are given. In an A/B pair the unfiltered run is
/// column A whenever the summaries say which is which; otherwise input order
/// decides.
pub fn render_report(
    results_paths: &[PathBuf],
    format: ReportFormat,
    ab: bool,
) -> Result<Report, HarnessError> {
    if results_paths.is_empty() {
        return Err(HarnessError::Config(
            "report needs at least one results file".into(),
        ));
    }
    if ab && results_paths.len() != 2 {
        return Err(HarnessError::Config(format!(
            "an A/B report needs exactly two results files, got {}",
            results_paths.len()
        )));
    }
    let mut runs = results_paths
        .iter()
        .map(|p| load_run(p))
        .collect::<Result<Vec<_>, _>>()?;
    if ab && runs[0].filter_applied == Some(true) && runs[1].filter_applied == Some(false) {
        runs.swap(0, 1);
    }

    let run_cells: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            vec![
                r.run_id.clone(),
                format_metric("Accuracy", Some(r.accuracy)),
                format_metric("Macro-F1", Some(r.macro_f1)),
                opt(r.avg_confidence, |x| format!("{x:.2}")),
                format_metric("Avg. Exec. Time", Some(r.avg_exec_time_s)),
                format_metric("Avg. Energy", Some(r.avg_energy_wh)),
                format_metric("Total CO₂", r.total_co2_g),
            ]
        })
        .collect();

    let comparison = ab.then(|| compare_runs(&runs[0], &runs[1]));
    let cmp_header = ["Metric", "w/o filtering", "with filtering", "Change"];
    let cmp_cells: Vec<Vec<String>> = comparison
        .iter()
        .flatten()
        .map(|c| {
            let fmt = |v| {
                if c.metric == "Avg. CS" {
                    opt(v, |x| format!("{x:.2}"))
                } else {
                    format_metric(c.metric, v)
                }
            };
            let change = match (c.change, c.verdict) {
                (Some(ch), Some(v)) => format!("{} {}", ch.arrow(), v.as_str()),
                _ => "n/a".into(),
            };
            vec![
                c.metric.to_string(),
                fmt(c.without_filter),
                fmt(c.with_filter),
                change,
            ]
        })
        .collect();

    let rendered = match format {
        ReportFormat::TableText => {
            let mut out = text_table(&RUN_COLUMNS, &run_cells);
            if comparison.is_some() {
                let _ = write!(out, "\n{}", text_table(&cmp_header, &cmp_cells));
            }
            out
        }
        ReportFormat::Csv => {
            if comparison.is_some() {
                let rows: Vec<Vec<String>> = comparison
                    .iter()
                    .flatten()
                    .map(|c| {
                        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                        vec![
                            c.metric.to_string(),
                            num(c.without_filter),
                            num(c.with_filter),
                            c.change
                                .map(|ch| ch.arrow().to_string())
                                .unwrap_or_default(),
                            c.verdict
                                .map(|v| v.as_str().to_string())
                                .unwrap_or_default(),
                        ]
                    })
                    .collect();
                csv_table(
                    &[
                        "metric",
                        "without_filtering",
                        "with_filtering",
                        "change",
                        "verdict",
                    ],
                    &rows,
                )?
            } else {
                let rows: Vec<Vec<String>> = runs
                    .iter()
                    .map(|r| {
                        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                        vec![
                            r.run_id.clone(),
                            r.accuracy.to_string(),
                            r.macro_f1.to_string(),
                            num(r.avg_confidence),
                            r.avg_exec_time_s.to_string(),
                            r.avg_energy_wh.to_string(),
                            num(r.total_co2_g),
                        ]
                    })
                    .collect();
                csv_table(
                    &[
                        "run_id",
                        "accuracy",
                        "macro_f1",
                        "avg_confidence",
                        "avg_exec_time_s",
                        "avg_energy_wh",
                        "total_co2_g",
                    ],
                    &rows,
                )?
            }
        }
    };
    Ok(Report {
        runs,
        comparison,
        rendered,
    })
}
