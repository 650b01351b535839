use std::sync::atomic::{AtomicUsize, Ordering};

use wsense::plan::{collect_reports, run_plan, DataSource, ExperimentPlan};
use wsense::report::{RunReport, Status};
use wsense_core::dataset::Dataset;
use wsense_core::zoo::Arch;

fn small_plan(out: &std::path::Path) -> ExperimentPlan {
    let mut plan = ExperimentPlan::new(Dataset::Wisdm, out, DataSource::Synthetic);
    plan.archs = vec![Arch::CnnWSense];
    plan.windows = vec![40, 80];
    plan.repeats = 2;
    plan.epochs = 2;
    plan.jobs = 2;
    plan.base_seed = 5;
    plan
}

#[test]
fn synthetic_plan_runs_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let plan = small_plan(dir.path());
    let ran = AtomicUsize::new(0);
    let out = run_plan(&plan, &|_| {}, &|_, _| {
        ran.fetch_add(1, Ordering::Relaxed);
    })
    .unwrap();
    assert_eq!(out.reports.len(), 4);
    assert_eq!(ran.load(Ordering::Relaxed), 4 * 2);
    for r in &out.reports {
        assert_eq!(r.status, Status::Ok, "{:?}", r.error);
        assert_eq!(r.audit.golden_match, (r.window == 80).then_some(true));
        let cell = dir.path().join(format!("cnn-wsense_w{}_r{:02}", r.window, r.repeat));
        for f in ["history.csv", "confusion.csv", "classification.txt", "report.json"] {
            assert!(cell.join(f).is_file(), "{f}");
        }
        let total: u64 = r.confusion.iter().flatten().sum();
        assert_eq!(total as usize, r.test_windows);
    }
    // same parameter count for both windows
    assert_eq!(out.reports[0].audit.total, out.reports[3].audit.total);

    for row in &out.summary.rows {
        let accs: Vec<f64> = out
            .reports
            .iter()
            .filter(|r| r.window == row.window)
            .map(|r| 100.0 * r.test_accuracy().unwrap())
            .collect();
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!((row.average_accuracy.unwrap() - mean).abs() < 1e-12);
    }
    assert!(dir.path().join("summary.csv").is_file());
    assert!(dir.path().join("plan.json").is_file());

    // second run reuses every finished cell
    let again = AtomicUsize::new(0);
    let out2 = run_plan(&plan, &|_| {}, &|_, _| {
        again.fetch_add(1, Ordering::Relaxed);
    })
    .unwrap();
    assert_eq!(again.load(Ordering::Relaxed), 0);
    assert_eq!(out2.summary, out.summary);
    let collected: Vec<RunReport> = collect_reports(dir.path()).unwrap();
    assert_eq!(collected.len(), 4);
}

#[test]
fn too_short_window_is_rejected_up_front() {
    let dir = tempfile::tempdir().unwrap();
    let mut plan = small_plan(dir.path());
    plan.archs = vec![Arch::ConvLstm];
    plan.windows = vec![16];
    assert!(run_plan(&plan, &|_| {}, &|_, _| {}).is_err());
}

#[test]
fn cell_seeds_follow_the_index() {
    let plan = small_plan(std::path::Path::new("unused"));
    let cells = plan.cells();
    assert_eq!(cells.len(), 4);
    for (i, c) in cells.iter().enumerate() {
        assert_eq!(c.index, i);
        assert_eq!(c.seed, 5 + i as u64);
    }
    assert_eq!(cells[3].dir_name(), "cnn-wsense_w80_r01");
}
