//! Run reports, per-cell CSV files and the plan summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use wsense_core::metrics::{confidence_interval, ConfusionMatrix, MetricsSummary};
use wsense_core::train::EpochRecord;

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub total: usize,
    pub trainable: usize,
    /// Published value, rendered (`236678` or `1455xxx`).
    pub golden: Option<String>,
    pub golden_match: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl From<&MetricsSummary> for MetricsRecord {
    fn from(m: &MetricsSummary) -> Self {
        Self {
            accuracy: m.accuracy,
            macro_precision: m.macro_precision,
            macro_recall: m.macro_recall,
            macro_f1: m.macro_f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub cell: usize,
    pub dataset: String,
    pub arch: String,
    pub window: usize,
    pub repeat: usize,
    pub seed: u64,
    pub status: Status,
    pub error: Option<String>,
    pub audit: AuditRecord,
    pub train_windows: usize,
    pub test_windows: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub train_accuracy: Option<f64>,
    pub test: Option<MetricsRecord>,
    pub confusion: Vec<Vec<u64>>,
    pub wall_clock_s: f64,
    pub history_file: Option<String>,
}

impl RunReport {
    pub fn test_accuracy(&self) -> Option<f64> {
        self.test.map(|t| t.accuracy)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").map_err(AppError::io(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(AppError::io(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "lr", "train_loss", "train_acc", "val_loss", "val_acc"])?;
    for r in history {
        w.write_record([
            r.epoch.to_string(),
            format!("{:e}", r.lr),
            r.train_loss.to_string(),
            r.train_acc.to_string(),
            r.val_loss.to_string(),
            r.val_acc.to_string(),
        ])?;
    }
    w.flush().map_err(AppError::io(path))
}

pub fn write_confusion(path: &Path, cm: &ConfusionMatrix, names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(std::iter::once("true\\pred").chain(names.iter().map(String::as_str)))?;
    for (name, row) in names.iter().zip(cm.rows()) {
        w.write_record(std::iter::once(name.clone()).chain(row.iter().map(u64::to_string)))?;
    }
    w.flush().map_err(AppError::io(path))
}

/// Per-class precision/recall/F1 table followed by the row-normalized
/// confusion matrix in percent.
pub fn classification_report(cm: &ConfusionMatrix, m: &MetricsSummary, names: &[String]) -> String {
    let width = names.iter().map(String::len).max().unwrap_or(0).max(12);
    let mut s = String::new();
    let _ = writeln!(s, "{:>width$}  precision  recall  f1-score  support", "");
    for (name, c) in names.iter().zip(&m.per_class) {
        let _ = writeln!(
            s,
            "{name:>width$}  {:>9.4}  {:>6.4}  {:>8.4}  {:>7}",
            c.precision, c.recall, c.f1, c.support
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:>width$}  {:>9}  {:>6}  {:>8.4}  {:>7}", "accuracy", "", "", m.accuracy, cm.total());
    let _ = writeln!(
        s,
        "{:>width$}  {:>9.4}  {:>6.4}  {:>8.4}  {:>7}",
        "macro avg",
        m.macro_precision,
        m.macro_recall,
        m.macro_f1,
        cm.total()
    );
    let _ = writeln!(s, "\nconfusion matrix (row %)");
    for (name, row) in names.iter().zip(cm.row_percentages()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:6.1}")).collect();
        let _ = writeln!(s, "{name:>width$}  {}", cells.join(" "));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub arch: String,
    pub window: usize,
    pub runs: usize,
    pub failed: usize,
    pub average_accuracy: Option<f64>,
    pub highest_accuracy: Option<f64>,
    pub parameters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchSummary {
    pub arch: String,
    /// Mean over window sizes of the per-window average accuracy.
    pub mean: f64,
    pub half_width_z: f64,
    pub half_width_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub archs: Vec<ArchSummary>,
}

/// Group reports by (arch, window) and summarize accuracy in percent.
pub fn summarize(reports: &[RunReport]) -> Summary {
    let mut groups: BTreeMap<(String, usize), Vec<&RunReport>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.arch.clone(), r.window)).or_default().push(r);
    }
    let rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((arch, window), rs)| {
            let accs: Vec<f64> = rs.iter().filter_map(|r| r.test_accuracy()).map(|a| 100.0 * a).collect();
            SummaryRow {
                arch,
                window,
                runs: rs.len(),
                failed: rs.iter().filter(|r| r.status == Status::Failed).count(),
                average_accuracy: (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64),
                highest_accuracy: accs.iter().copied().reduce(f64::max),
                parameters: rs[0].audit.total,
            }
        })
        .collect();
    let mut per_arch: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        if let Some(a) = r.average_accuracy {
            per_arch.entry(&r.arch).or_default().push(a);
        }
    }
    let archs = per_arch
        .into_iter()
        .filter_map(|(arch, v)| {
            confidence_interval(&v).ok().map(|ci| ArchSummary {
                arch: arch.to_owned(),
                mean: ci.mean,
                half_width_z: ci.half_width_z,
                half_width_t: ci.half_width_t,
            })
        })
        .collect();
    Summary { rows, archs }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_default()
}

/// `summary.csv`: one row per (window, arch) with average/highest accuracy
/// and parameter count, then one `ci` row per architecture.
pub fn write_summary(path: &Path, s: &Summary) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "window", "arch", "runs", "failed", "average_accuracy", "highest_accuracy", "parameters",
    ])?;
    let mut rows: Vec<&SummaryRow> = s.rows.iter().collect();
    rows.sort_by(|a, b| (a.window, &a.arch).cmp(&(b.window, &b.arch)));
    for r in rows {
        w.write_record([
            r.window.to_string(),
            r.arch.clone(),
            r.runs.to_string(),
            r.failed.to_string(),
            opt(r.average_accuracy),
            opt(r.highest_accuracy),
            r.parameters.to_string(),
        ])?;
    }
    for a in &s.archs {
        w.write_record([
            "ci".to_owned(),
            a.arch.clone(),
            String::new(),
            String::new(),
            format!("{:.2} ± {:.3} (z) / ± {:.3} (t)", a.mean, a.half_width_z, a.half_width_t),
            String::new(),
            String::new(),
        ])?;
    }
    w.flush().map_err(AppError::io(path))
}

/// Plain-text rendering of [`Summary`] in window × architecture layout.
pub fn render_summary(s: &Summary) -> String {
    let archs: Vec<&str> = {
        let mut a: Vec<&str> = s.rows.iter().map(|r| r.arch.as_str()).collect();
        a.sort();
        a.dedup();
        a
    };
    let mut windows: Vec<usize> = s.rows.iter().map(|r| r.window).collect();
    windows.sort();
    windows.dedup();
    let find = |a: &str, w: usize| s.rows.iter().find(|r| r.arch == a && r.window == w);
    let mut out = String::new();
    let _ = write!(out, "{:>8}", "window");
    for a in &archs {
        let _ = write!(out, " {:>17}", format!("{a} avg/max"));
    }
    let _ = writeln!(out);
    for w in &windows {
        let _ = write!(out, "{w:>8}");
        for a in &archs {
            let cell = find(a, *w)
                .map(|r| format!("{}/{}", opt(r.average_accuracy), opt(r.highest_accuracy)))
                .unwrap_or_default();
            let _ = write!(out, " {cell:>17}");
        }
        let _ = writeln!(out);
    }
    let _ = write!(out, "{:>8}", "95% CI");
    for a in &archs {
        let cell = s
            .archs
            .iter()
            .find(|x| x.arch == *a)
            .map(|x| format!("{:.2}±{:.3}", x.mean, x.half_width_z))
            .unwrap_or_default();
        let _ = write!(out, " {cell:>17}");
    }
    let _ = writeln!(out);
    let _ = write!(out, "{:>8}", "params");
    for a in &archs {
        let ps: Vec<usize> = windows.iter().filter_map(|w| find(a, *w)).map(|r| r.parameters).collect();
        let cell = match (ps.iter().min(), ps.iter().max()) {
            (Some(lo), Some(hi)) if lo == hi => lo.to_string(),
            (Some(lo), Some(hi)) => format!("{lo}..{hi}"),
            _ => String::new(),
        };
        let _ = write!(out, " {cell:>17}");
    }
    let _ = writeln!(out);
    out
}
