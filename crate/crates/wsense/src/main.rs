use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand};

use wsense::audit::{audit_cell, check_window, render};
use wsense::error::AppError;
use wsense::plan::{collect_reports, finish, run_plan, segment_stats, DataSource, ExperimentPlan};
use wsense::report::{render_summary, Status};
use wsense_core::dataset::Dataset;
use wsense_core::zoo::Arch;

#[derive(Parser)]
#[command(name = "wsense", version, about = "WSense activity-recognition experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print per-layer parameter counts and compare with published totals.
    Audit {
        #[arg(long, value_parser = parse_dataset)]
        dataset: Option<Dataset>,
        #[arg(long, value_parser = parse_arch)]
        arch: Vec<Arch>,
        #[arg(long)]
        window: Vec<usize>,
        /// Only print the summary line per cell.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Window counts and split sizes per window length.
    SegmentStats(GridArgs),
    /// Train a single cell.
    Train(GridArgs),
    /// Run a grid of cells (resumable).
    Plan(GridArgs),
    /// Rebuild the summary from the reports under --out.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, value_parser = parse_dataset)]
    dataset: Dataset,
    #[arg(long, value_parser = parse_arch)]
    arch: Vec<Arch>,
    #[arg(long)]
    window: Vec<usize>,
    /// Overlap in percent; defaults to 50 (WISDM) or 78 (PAMAP2).
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Use generated class-separable streams instead of a corpus.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, env = "WSENSE_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 0.1)]
    lr_factor: f64,
    /// Keep every n-th PAMAP2 sample.
    #[arg(long, default_value_t = 1)]
    decimate: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Also write each cell's split (manifest, window index, payloads).
    #[arg(long)]
    save_split: bool,
    /// Print every epoch.
    #[arg(long, short)]
    verbose: bool,
}

fn parse_dataset(s: &str) -> Result<Dataset, wsense_core::Error> {
    s.parse()
}

fn parse_arch(s: &str) -> Result<Arch, wsense_core::Error> {
    s.parse()
}

impl GridArgs {
    fn plan(&self) -> Result<ExperimentPlan, AppError> {
        let source = if self.synthetic {
            DataSource::Synthetic
        } else {
            let dir = self
                .data_dir
                .clone()
                .ok_or_else(|| AppError::MissingData(PathBuf::from("<unset>")))?;
            DataSource::Dir(dir)
        };
        let mut plan = ExperimentPlan::new(self.dataset, &self.out, source);
        if !self.arch.is_empty() {
            plan.archs = self.arch.clone();
        }
        if !self.window.is_empty() {
            plan.windows = self.window.clone();
        }
        plan.overlap_pct = self.overlap.unwrap_or(self.dataset.overlap_pct());
        plan.repeats = self.repeats;
        plan.base_seed = self.seed;
        plan.jobs = self.jobs;
        plan.lr_factor = self.lr_factor;
        plan.decimate = self.decimate;
        plan.epochs = self.epochs;
        plan.save_split = self.save_split;
        Ok(plan)
    }
}

fn cmd_audit(dataset: Option<Dataset>, archs: Vec<Arch>, windows: Vec<usize>, quiet: bool) -> Result<bool, AppError> {
    let datasets = dataset.map_or(Dataset::ALL.to_vec(), |d| vec![d]);
    let archs = if archs.is_empty() { Arch::ALL.to_vec() } else { archs };
    let mut all_ok = true;
    for ds in datasets {
        let ws = if windows.is_empty() { ds.windows().to_vec() } else { windows.clone() };
        for &w in &ws {
            check_window(ds, w)?;
        }
        for &a in &archs {
            for &w in &ws {
                let o = audit_cell(ds, a, w)?;
                let ok = o.matches() != Some(false);
                all_ok &= ok;
                if quiet {
                    println!(
                        "{ds:<7} {a:<16} {w:>4} {:>10} {}",
                        o.audit.total,
                        if ok { "PASS" } else { "FAIL" }
                    );
                } else {
                    println!("{}", render(&o));
                }
            }
        }
    }
    Ok(all_ok)
}

fn cmd_segment_stats(args: &GridArgs) -> Result<(), AppError> {
    let plan = args.plan()?;
    let streams = plan.load_streams()?;
    let samples: usize = streams.iter().map(|s| s.len()).sum();
    println!("{} streams, {samples} samples", streams.len());
    println!(
        "{:>6} {:>6} {:>5} {:>8} {:>8} {:>7} {:>7} {:>8} {:>15}",
        "window", "p", "step", "secs", "windows", "train", "test", "ratio", "published"
    );
    let stats = segment_stats(&plan, &streams)?;
    for (i, s) in stats.iter().enumerate() {
        let ratio = i
            .checked_sub(1)
            .map(|j| format!("{:.3}", stats[j].windows as f64 / s.windows.max(1) as f64))
            .unwrap_or_default();
        let published = s.reference.map(|(a, b)| format!("{a}/{b}")).unwrap_or_default();
        println!(
            "{:>6} {:>6} {:>5} {:>8.2} {:>8} {:>7} {:>7} {:>8} {:>15}",
            s.window, s.overlap, s.step, s.duration_s, s.windows, s.train, s.test, ratio, published
        );
    }
    Ok(())
}

fn cmd_plan(args: &GridArgs, single: bool) -> Result<bool, AppError> {
    let mut plan = args.plan()?;
    if single {
        if plan.archs.len() != 1 || plan.windows.len() != 1 {
            return Err(AppError::Usage("train needs exactly one --arch and one --window".into()));
        }
        plan.repeats = 1;
    }
    let total = plan.cells().len();
    let done = AtomicUsize::new(0);
    let verbose = args.verbose;
    let outcome = run_plan(
        &plan,
        &|r| {
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            let result = match (r.status, r.test_accuracy()) {
                (Status::Ok, Some(acc)) => format!("test acc {:.2}%", 100.0 * acc),
                _ => format!("FAILED: {}", r.error.as_deref().unwrap_or("")),
            };
            eprintln!(
                "[{k}/{total}] {} w{} r{:02} params {} {result} ({:.1}s)",
                r.arch, r.window, r.repeat, r.audit.total, r.wall_clock_s
            );
        },
        &|c, e| {
            if verbose {
                eprintln!(
                    "  {} w{} r{:02} epoch {:>3} lr {:.0e} loss {:.4} acc {:.4} val_loss {:.4} val_acc {:.4}",
                    c.arch, c.window, c.repeat, e.epoch, e.lr, e.train_loss, e.train_acc, e.val_loss, e.val_acc
                );
            }
        },
    )?;
    print!("{}", render_summary(&outcome.summary));
    Ok(outcome.reports.iter().all(|r| r.status == Status::Ok))
}

fn cmd_report(out: &PathBuf) -> Result<(), AppError> {
    let reports = collect_reports(out)?;
    if reports.is_empty() {
        return Err(AppError::Usage(format!("no report.json files under {}", out.display())));
    }
    let summary = finish(out, &reports)?;
    print!("{}", render_summary(&summary));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Audit {
            dataset,
            arch,
            window,
            quiet,
        } => cmd_audit(*dataset, arch.clone(), window.clone(), *quiet),
        Command::SegmentStats(a) => cmd_segment_stats(a).map(|_| true),
        Command::Train(a) => cmd_plan(a, true),
        Command::Plan(a) => cmd_plan(a, false),
        Command::Report { out } => cmd_report(out).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e @ AppError::Usage(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
