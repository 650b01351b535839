use std::process::Command;

fn wsense(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wsense"))
        .args(args)
        .env_remove("WSENSE_DATA_DIR")
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn audit_reports_published_totals() {
    for (ds, arch, w) in [("pamap2", "cnn-wsense", "300"), ("wisdm", "convlstm", "120"), ("wisdm", "cnn-se", "360")] {
        let (code, out, err) = wsense(&["audit", "--dataset", ds, "--arch", arch, "--window", w, "-q"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("PASS"), "{out}");
    }
}

#[test]
fn wisdm_cnn_w80_total_is_printed() {
    let (code, out, _) = wsense(&["audit", "--dataset", "wisdm", "--arch", "cnn", "--window", "80", "-q"]);
    assert_eq!(code, 0);
    assert!(out.contains("727942"), "{out}");
}

#[test]
fn usage_errors_exit_with_two() {
    let (code, _, err) = wsense(&["audit", "--dataset", "wisdm", "--window", "81"]);
    assert_eq!(code, 2, "{err}");
    let (code, _, _) = wsense(&["audit", "--arch", "transformer"]);
    assert_eq!(code, 2);
    let (code, _, err) = wsense(&["train", "--dataset", "wisdm", "--synthetic", "--arch", "cnn", "--window", "80", "--window", "120"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn missing_corpus_is_reported() {
    let (code, _, err) = wsense(&["segment-stats", "--dataset", "wisdm"]);
    assert_eq!(code, 1);
    assert!(!err.is_empty());
}

#[test]
fn segment_stats_on_synthetic_streams() {
    let (code, out, err) = wsense(&["segment-stats", "--dataset", "wisdm", "--synthetic", "--window", "80", "--window", "160"]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4, "{out}");
    assert!(lines[2].trim_start().starts_with("80"));
}
