//! Report assembly and emission.
//!
//! The JSON format is one self-contained document: configuration echo,
//! per-method blocks (per-game aggregates, summary metrics, skipped games,
//! optional convergence details), and the pairwise signed-rank tests. The
//! CSV format is one data row per (game, method) plus a separate
//! `<name>.summary.csv` footer file carrying the per-method metrics and the
//! pairwise tests. CSV numbers are serialized with 17 significant digits so
//! they parse back to the exact same doubles.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use pool_core::evaluation::{MethodResult, WilcoxonResult};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {}: {source}", path.display())]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report has no method blocks")]
    Empty,
    #[error("aggregates have inconsistent dimensions: {0} vs {1}")]
    MixedDimensions(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Configuration echo: enough to rerun the exact benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub methods: Vec<String>,
    pub epsilon: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub bms_clamp: f64,
}

/// Convergence bookkeeping for one consensual game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceInfo {
    pub game_id: String,
    pub iterations: usize,
    pub final_delta: f64,
    /// Full spread trace, present only when requested; it can dominate the
    /// report size on large datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_trace: Option<Vec<f64>>,
}

/// One method's results plus consensual convergence details when relevant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    #[serde(flatten)]
    pub result: MethodResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Vec<ConvergenceInfo>>,
}

/// Left-tailed signed-rank comparison of two methods' per-game absolute
/// errors (method A minus method B over the games both scored).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub method_a: String,
    pub method_b: String,
    /// Games scored by both methods.
    pub games_compared: usize,
    /// Absent when the test is undefined (no common games, or every paired
    /// difference is zero); `note` then says why.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<WilcoxonResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// The full benchmark outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub games: usize,
    pub config: ReportConfig,
    pub methods: Vec<MethodReport>,
    pub pairwise_tests: Vec<PairwiseTest>,
}

/// Writes the report to `path` in the requested format. The CSV format
/// additionally writes `<stem>.summary.csv` next to the main file and
/// returns both paths.
pub fn emit_report(
    report: &EvaluationReport,
    format: ReportFormat,
    path: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    if report.methods.is_empty() {
        return Err(ReportError::Empty);
    }
    match format {
        ReportFormat::Json => {
            let mut body =
                serde_json::to_string_pretty(report).expect("report serialization is infallible");
            body.push('\n');
            write_file(path, &body)?;
            Ok(vec![path.to_path_buf()])
        }
        ReportFormat::Csv => {
            let summary = summary_path(path);
            write_file(path, &render_csv_rows(report)?)?;
            write_file(&summary, &render_csv_summary(report))?;
            Ok(vec![path.to_path_buf(), summary])
        }
    }
}

/// `report.csv` -> `report.summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}.summary.csv"))
}

/// 17 significant digits: parses back to the identical double.
fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(fmt_f64).unwrap_or_default()
}

fn render_csv_rows(report: &EvaluationReport) -> Result<String, ReportError> {
    let mut z: Option<usize> = None;
    for method in &report.methods {
        for game in &method.result.per_game {
            match z {
                None => z = Some(game.aggregate.len()),
                Some(expected) if expected != game.aggregate.len() => {
                    return Err(ReportError::MixedDimensions(expected, game.aggregate.len()))
                }
                _ => {}
            }
        }
    }
    let z = z.unwrap_or(2);

    let mut out = String::from("game_id,method");
    for k in 1..=z {
        let _ = write!(out, ",p_{k}");
    }
    out.push_str(",absolute_error\n");
    for method in &report.methods {
        for game in &method.result.per_game {
            let _ = write!(out, "{},{}", game.game_id, method.result.method_name);
            for p in game.aggregate.as_slice() {
                let _ = write!(out, ",{}", fmt_f64(*p));
            }
            let _ = writeln!(out, ",{}", fmt_f64(game.absolute_error));
        }
    }
    Ok(out)
}

fn render_csv_summary(report: &EvaluationReport) -> String {
    let mut out = String::from(
        "method,games_scored,games_skipped,overall_accuracy,favorites_correct,favorites_counted,\
         no_favorite_excluded,mean_absolute_error,stddev_absolute_error\n",
    );
    for method in &report.methods {
        let r = &method.result;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.method_name,
            r.per_game.len(),
            r.skipped_games.len(),
            fmt_opt(r.overall_accuracy),
            r.accuracy.correct,
            r.accuracy.counted,
            r.accuracy.excluded,
            fmt_opt(r.mean_absolute_error),
            fmt_opt(r.stddev_absolute_error),
        );
    }
    out.push('\n');
    out.push_str("method_a,method_b,games_compared,n_nonzero,w_plus,p_value,exact,note\n");
    for test in &report.pairwise_tests {
        let (n_nonzero, w_plus, p_value, exact) = match &test.outcome {
            Some(o) => (
                o.n_nonzero.to_string(),
                fmt_f64(o.statistic),
                fmt_f64(o.p_value),
                o.exact.to_string(),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            test.method_a,
            test.method_b,
            test.games_compared,
            n_nonzero,
            w_plus,
            p_value,
            exact,
            test.note.as_deref().unwrap_or_default(),
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), ReportError> {
    std::fs::write(path, contents).map_err(|source| ReportError::Unwritable {
        path: path.to_path_buf(),
        source,
    })
}
