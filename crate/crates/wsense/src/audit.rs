use std::fmt::Write as _;

use wsense_core::dataset::Dataset;
use wsense_core::golden::{golden_total, Golden};
use wsense_core::zoo::{build_model, Arch, ParamAudit};

use crate::error::{AppError, Result};
use crate::report::AuditRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOutcome {
    pub dataset: Dataset,
    pub arch: Arch,
    pub window: usize,
    pub audit: ParamAudit,
    pub golden: Option<Golden>,
}

impl AuditOutcome {
    /// `None` when no published value exists for the cell.
    pub fn matches(&self) -> Option<bool> {
        self.golden.map(|g| g.matches(self.audit.total as u64))
    }

    pub fn record(&self) -> AuditRecord {
        AuditRecord {
            total: self.audit.total,
            trainable: self.audit.trainable,
            golden: self.golden.map(render_golden),
            golden_match: self.matches(),
        }
    }
}

pub fn render_golden(g: Golden) -> String {
    match g {
        Golden::Exact(v) => v.to_string(),
        Golden::Thousands(k) => format!("{k}xxx"),
    }
}

pub fn check_window(dataset: Dataset, window: usize) -> Result<()> {
    if dataset.windows().contains(&window) {
        Ok(())
    } else {
        Err(AppError::Usage(format!(
            "window {window} is not in the {dataset} grid {:?}",
            dataset.windows()
        )))
    }
}

/// Build the model for a grid cell and compare its size with the published
/// total.
pub fn audit_cell(dataset: Dataset, arch: Arch, window: usize) -> Result<AuditOutcome> {
    check_window(dataset, window)?;
    let model = build_model(arch, window, dataset.channels(), dataset.n_classes(), 0)?;
    Ok(AuditOutcome {
        dataset,
        arch,
        window,
        audit: model.audit(),
        golden: golden_total(dataset, arch, window),
    })
}

pub fn render(o: &AuditOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} / {} / window {}", o.dataset, o.arch, o.window);
    let _ = writeln!(s, "{:<24} {:<20} {:>12} {:>12}", "layer", "output", "params", "trainable");
    for l in &o.audit.layers {
        let _ = writeln!(
            s,
            "{:<24} {:<20} {:>12} {:>12}",
            l.name,
            format!("{:?}", l.output_shape),
            l.params.total,
            l.params.trainable
        );
    }
    let _ = writeln!(
        s,
        "total {} (trainable {}, non-trainable {})",
        o.audit.total,
        o.audit.trainable,
        o.audit.non_trainable()
    );
    let verdict = match (o.golden, o.matches()) {
        (Some(g), Some(true)) => format!("golden {} PASS", render_golden(g)),
        (Some(g), _) => format!("golden {} FAIL", render_golden(g)),
        _ => "golden n/a".to_owned(),
    };
    let _ = writeln!(s, "{verdict}");
    s
}
