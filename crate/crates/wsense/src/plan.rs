//! Experiment grid execution: ingest → segment → split → build → audit →
//! fit → evaluate, one directory per cell.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use wsense_core::dataset::{make_split, Dataset, DatasetSplit, SensorStream};
use wsense_core::golden::{golden_total, reference_counts};
use wsense_core::metrics::{compute_metrics, confusion};
use wsense_core::segment::{SegmentationConfig, Window};
use wsense_core::synthetic::SyntheticConfig;
use wsense_core::train::{evaluate, fit_with, EpochRecord, TrainConfig};
use wsense_core::zoo::{build_model, Arch};

use crate::audit::render_golden;
use crate::error::{AppError, Result};
use crate::ingest::{load, segment_streams, Pamap2Options};
use crate::report::{
    classification_report, render_summary, summarize, write_confusion, write_history, write_summary,
    AuditRecord, MetricsRecord, RunReport, Status, Summary,
};
use crate::tensor_io::save_split;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic,
    /// Root directory holding the corpus.
    Dir(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub dataset: Dataset,
    pub archs: Vec<Arch>,
    pub windows: Vec<usize>,
    pub repeats: usize,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    pub source: DataSource,
    pub overlap_pct: f64,
    pub lr_factor: f64,
    pub epochs: usize,
    pub jobs: usize,
    pub decimate: usize,
    pub test_fraction: f64,
    pub save_split: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub index: usize,
    pub arch: Arch,
    pub window: usize,
    pub repeat: usize,
    pub seed: u64,
}

impl Cell {
    pub fn dir_name(&self) -> String {
        format!("{}_w{}_r{:02}", self.arch, self.window, self.repeat)
    }
}

#[derive(Serialize)]
struct PlanFile<'a> {
    dataset: &'a str,
    archs: Vec<&'a str>,
    windows: &'a [usize],
    repeats: usize,
    base_seed: u64,
    source: String,
    overlap_pct: f64,
    lr_factor: f64,
    epochs: usize,
    decimate: usize,
    test_fraction: f64,
    normalization: &'a str,
    cells: usize,
}

impl ExperimentPlan {
    /// Every architecture over the dataset's window grid, ten repeats.
    pub fn new(dataset: Dataset, out_dir: impl Into<PathBuf>, source: DataSource) -> Self {
        Self {
            dataset,
            archs: Arch::ALL.to_vec(),
            windows: dataset.windows().to_vec(),
            repeats: 10,
            base_seed: 0,
            out_dir: out_dir.into(),
            source,
            overlap_pct: dataset.overlap_pct(),
            lr_factor: 0.1,
            epochs: 100,
            jobs: 1,
            decimate: 1,
            test_fraction: 0.2,
            save_split: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.archs.is_empty() || self.windows.is_empty() || self.repeats == 0 {
            return Err(AppError::Usage("plan needs at least one arch, window and repeat".into()));
        }
        for &a in &self.archs {
            for &w in &self.windows {
                if w < a.min_window() {
                    return Err(AppError::Usage(format!(
                        "window {w} is too short for {a} (minimum {})",
                        a.min_window()
                    )));
                }
            }
        }
        if self.decimate == 0 || self.jobs == 0 {
            return Err(AppError::Usage("--decimate and --jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Cells in arch → window → repeat order; seed = base seed + index.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &arch in &self.archs {
            for &window in &self.windows {
                for repeat in 0..self.repeats {
                    let index = out.len();
                    out.push(Cell {
                        index,
                        arch,
                        window,
                        repeat,
                        seed: self.base_seed + index as u64,
                    });
                }
            }
        }
        out
    }

    pub fn segmentation(&self, window: usize) -> Result<SegmentationConfig> {
        let rate = self.dataset.sample_rate() / self.decimate as f64;
        Ok(SegmentationConfig::from_overlap_pct(window, self.overlap_pct, 1.0 / rate)?)
    }

    pub fn class_names(&self) -> Vec<String> {
        self.dataset.class_names().iter().map(|s| s.to_string()).collect()
    }

    fn describe(&self) -> PlanFile<'_> {
        PlanFile {
            dataset: self.dataset.as_str(),
            archs: self.archs.iter().map(|a| a.as_str()).collect(),
            windows: &self.windows,
            repeats: self.repeats,
            base_seed: self.base_seed,
            source: match &self.source {
                DataSource::Synthetic => "synthetic".into(),
                DataSource::Dir(p) => p.display().to_string(),
            },
            overlap_pct: self.overlap_pct,
            lr_factor: self.lr_factor,
            epochs: self.epochs,
            decimate: self.decimate,
            test_fraction: self.test_fraction,
            normalization: "per-channel z-score fitted on train windows",
            cells: self.archs.len() * self.windows.len() * self.repeats,
        }
    }

    /// Synthetic streams sized so the longest window still yields several
    /// windows per activity run.
    pub fn synthetic(&self) -> SyntheticConfig {
        let longest = self.windows.iter().copied().max().unwrap_or(0);
        SyntheticConfig {
            run_length: (4 * longest).max(400),
            sample_rate: self.dataset.sample_rate() / self.decimate as f64,
            ..SyntheticConfig::new(self.dataset.channels(), self.dataset.n_classes(), self.base_seed)
        }
    }

    pub fn load_streams(&self) -> Result<Vec<SensorStream>> {
        match &self.source {
            DataSource::Synthetic => Ok(self.synthetic().streams()?),
            DataSource::Dir(root) => {
                let opts = Pamap2Options {
                    decimate: self.decimate,
                    ..Pamap2Options::default()
                };
                Ok(load(self.dataset, root, &opts)?.streams)
            }
        }
    }
}

fn failed(cell: &Cell, plan: &ExperimentPlan, audit: AuditRecord, err: String, t0: Instant) -> RunReport {
    RunReport {
        cell: cell.index,
        dataset: plan.dataset.to_string(),
        arch: cell.arch.to_string(),
        window: cell.window,
        repeat: cell.repeat,
        seed: cell.seed,
        status: Status::Failed,
        error: Some(err),
        audit,
        train_windows: 0,
        test_windows: 0,
        epochs_run: 0,
        best_epoch: 0,
        stopped_early: false,
        train_accuracy: None,
        test: None,
        confusion: Vec::new(),
        wall_clock_s: t0.elapsed().as_secs_f64(),
        history_file: None,
    }
}

/// Run one cell (or reuse its completed report) and write its files.
pub fn run_cell(
    plan: &ExperimentPlan,
    cell: &Cell,
    windows: &[Window],
    on_epoch: &(dyn Fn(&Cell, &EpochRecord) + Sync),
) -> Result<RunReport> {
    let dir = plan.out_dir.join(cell.dir_name());
    let report_path = dir.join("report.json");
    if let Ok(done) = RunReport::read(&report_path) {
        if done.status == Status::Ok && done.seed == cell.seed {
            return Ok(done);
        }
    }
    fs::create_dir_all(&dir).map_err(AppError::io(&dir))?;
    let t0 = Instant::now();
    let report = match train_cell(plan, cell, windows, &dir, on_epoch) {
        Ok(r) => r,
        Err((audit, e)) => failed(cell, plan, audit, e.to_string(), t0),
    };
    let report = RunReport {
        wall_clock_s: t0.elapsed().as_secs_f64(),
        ..report
    };
    report.write(&report_path)?;
    Ok(report)
}

type CellError = (AuditRecord, AppError);

fn train_cell(
    plan: &ExperimentPlan,
    cell: &Cell,
    windows: &[Window],
    dir: &Path,
    on_epoch: &(dyn Fn(&Cell, &EpochRecord) + Sync),
) -> std::result::Result<RunReport, CellError> {
    let ds = plan.dataset;
    let empty = AuditRecord {
        total: 0,
        trainable: 0,
        golden: None,
        golden_match: None,
    };
    let mut model = build_model(cell.arch, cell.window, ds.channels(), ds.n_classes(), cell.seed)
        .map_err(|e| (empty.clone(), e.into()))?;
    let a = model.audit();
    let golden = golden_total(ds, cell.arch, cell.window);
    let audit = AuditRecord {
        total: a.total,
        trainable: a.trainable,
        golden: golden.map(render_golden),
        golden_match: golden.map(|g| g.matches(a.total as u64)),
    };
    let err = |e: AppError| (audit.clone(), e);
    if audit.golden_match == Some(false) {
        return Err(err(AppError::Usage(format!(
            "parameter audit {} does not match published {}",
            a.total,
            audit.golden.as_deref().unwrap_or("")
        ))));
    }
    let split: DatasetSplit = make_split(windows.to_vec(), plan.test_fraction, cell.seed, plan.class_names())
        .map_err(|e| err(e.into()))?;
    if plan.save_split {
        save_split(&dir.join("split"), &split).map_err(err)?;
    }
    let cfg = TrainConfig {
        epochs: plan.epochs,
        lr_factor: plan.lr_factor,
        ..TrainConfig::for_dataset(ds, cell.seed)
    };
    let state = fit_with(&mut model, &split, &cfg, |r| on_epoch(cell, r)).map_err(|e| err(e.into()))?;
    write_history(&dir.join("history.csv"), &state.history).map_err(err)?;

    let train_eval = evaluate(&model, &split.train, cfg.batch_size).map_err(|e| err(e.into()))?;
    let eval_set = if split.test.is_empty() { &split.train } else { &split.test };
    let test_eval = evaluate(&model, eval_set, cfg.batch_size).map_err(|e| err(e.into()))?;
    let cm = confusion(&test_eval.labels, &test_eval.predictions, ds.n_classes()).map_err(|e| err(e.into()))?;
    let metrics = compute_metrics(&cm).map_err(|e| err(e.into()))?;
    let names = plan.class_names();
    write_confusion(&dir.join("confusion.csv"), &cm, &names).map_err(err)?;
    let text = classification_report(&cm, &metrics, &names);
    let path = dir.join("classification.txt");
    fs::write(&path, text).map_err(|e| err(AppError::io(&path)(e)))?;

    Ok(RunReport {
        cell: cell.index,
        dataset: ds.to_string(),
        arch: cell.arch.to_string(),
        window: cell.window,
        repeat: cell.repeat,
        seed: cell.seed,
        status: Status::Ok,
        error: None,
        audit,
        train_windows: split.train.len(),
        test_windows: split.test.len(),
        epochs_run: state.epochs_run,
        best_epoch: state.best_epoch,
        stopped_early: state.stopped_early,
        train_accuracy: Some(train_eval.accuracy),
        test: Some(MetricsRecord::from(&metrics)),
        confusion: cm.rows().map(<[u64]>::to_vec).collect(),
        wall_clock_s: 0.0,
        history_file: Some("history.csv".into()),
    })
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub reports: Vec<RunReport>,
    pub summary: Summary,
}

pub fn run_plan(
    plan: &ExperimentPlan,
    on_report: &(dyn Fn(&RunReport) + Sync),
    on_epoch: &(dyn Fn(&Cell, &EpochRecord) + Sync),
) -> Result<PlanOutcome> {
    plan.validate()?;
    fs::create_dir_all(&plan.out_dir).map_err(AppError::io(&plan.out_dir))?;
    let plan_path = plan.out_dir.join("plan.json");
    fs::write(&plan_path, serde_json::to_string_pretty(&plan.describe())? + "\n")
        .map_err(AppError::io(&plan_path))?;

    let streams = plan.load_streams()?;
    let segmented: Vec<OnceLock<std::result::Result<Arc<Vec<Window>>, String>>> =
        plan.windows.iter().map(|_| OnceLock::new()).collect();
    let windows_for = |w: usize| {
        let i = plan.windows.iter().position(|&x| x == w).expect("cell window from plan");
        segmented[i]
            .get_or_init(|| {
                plan.segmentation(w)
                    .and_then(|cfg| segment_streams(&streams, &cfg))
                    .map(Arc::new)
                    .map_err(|e| e.to_string())
            })
            .clone()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| AppError::Usage(e.to_string()))?;
    let reports = pool.install(|| {
        plan.cells()
            .par_iter()
            .map(|cell| {
                let report = match windows_for(cell.window) {
                    Ok(ws) => run_cell(plan, cell, &ws, on_epoch)?,
                    Err(e) => {
                        let t0 = Instant::now();
                        let empty = AuditRecord {
                            total: 0,
                            trainable: 0,
                            golden: None,
                            golden_match: None,
                        };
                        let r = failed(cell, plan, empty, e, t0);
                        let dir = plan.out_dir.join(cell.dir_name());
                        fs::create_dir_all(&dir).map_err(AppError::io(&dir))?;
                        r.write(&dir.join("report.json"))?;
                        r
                    }
                };
                on_report(&report);
                Ok(report)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = finish(&plan.out_dir, &reports)?;
    Ok(PlanOutcome { reports, summary })
}

/// Write `summary.csv` and `summary.txt` for a set of reports.
pub fn finish(out_dir: &Path, reports: &[RunReport]) -> Result<Summary> {
    let summary = summarize(reports);
    write_summary(&out_dir.join("summary.csv"), &summary)?;
    let path = out_dir.join("summary.txt");
    fs::write(&path, render_summary(&summary)).map_err(AppError::io(&path))?;
    Ok(summary)
}

/// Every `*/report.json` under `out_dir`, ordered by cell index.
pub fn collect_reports(out_dir: &Path) -> Result<Vec<RunReport>> {
    let mut reports = Vec::new();
    for entry in fs::read_dir(out_dir).map_err(AppError::io(out_dir))? {
        let path = entry.map_err(AppError::io(out_dir))?.path().join("report.json");
        if path.is_file() {
            reports.push(RunReport::read(&path)?);
        }
    }
    reports.sort_by_key(|r| r.cell);
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentStat {
    pub window: usize,
    pub overlap: usize,
    pub step: usize,
    pub duration_s: f64,
    pub windows: usize,
    pub train: usize,
    pub test: usize,
    pub reference: Option<(usize, usize)>,
}

/// Window counts and split sizes for each configured window length.
pub fn segment_stats(plan: &ExperimentPlan, streams: &[SensorStream]) -> Result<Vec<SegmentStat>> {
    plan.windows
        .iter()
        .map(|&w| {
            let cfg = plan.segmentation(w)?;
            let ws = segment_streams(streams, &cfg)?;
            let total = ws.len();
            let (train, test) = match make_split(ws, plan.test_fraction, plan.base_seed, plan.class_names()) {
                Ok(s) => (s.train.len(), s.test.len()),
                Err(_) => (0, 0),
            };
            Ok(SegmentStat {
                window: w,
                overlap: cfg.p,
                step: cfg.step(),
                duration_s: cfg.duration(),
                windows: total,
                train,
                test,
                reference: reference_counts(plan.dataset, w),
            })
        })
        .collect()
}
