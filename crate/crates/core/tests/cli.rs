use std::path::Path;
use std::process::{Command, Output};

use qudit_entangler::report::{read_gate_file, read_records, DistributionReport};

fn uent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uent")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn strip_timestamp(line: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(line).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v.to_string()
}

#[test]
fn check_rejects_uh_at_column_zero() {
    let out = uent(&["check", "--gate", "UH", "--m", "3", "--n", "4"]);
    assert_eq!(code(&out), 10);
    let text = stdout(&out);
    assert!(text.contains("RejectedByColumnFilter"));
    assert!(text.contains("\"filter_column\":0"));
}

#[test]
fn check_rejects_fourier_quickly() {
    let out = uent(&["check", "--gate", "F12", "--m", "3", "--n", "4"]);
    assert_eq!(code(&out), 10);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&uent(&[])), 2);
    assert_eq!(code(&uent(&["check"])), 2);
    assert_eq!(code(&uent(&["check", "--gate", "UH", "--m", "3"])), 2);
    assert_eq!(code(&uent(&["check", "--gate", "UH", "--log-base", "1"])), 2);
    assert_eq!(code(&uent(&["check", "--gate", "UH", "--population", "2"])), 2);
}

#[test]
fn runtime_errors_exit_1() {
    assert_eq!(code(&uent(&["filter", "--gate", "NOT_A_GATE"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"label":"b","m":2,"n":2,"matrix":[[[1,0],[1,0],[0,0],[0,0]],[[0,0],[1,0],[0,0],[0,0]],[[0,0],[0,0],[1,0],[0,0]],[[0,0],[0,0],[0,0],[1,0]]]}"#).unwrap();
    assert_eq!(code(&uent(&["filter", "--gate", bad.to_str().unwrap()])), 1);
    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(code(&uent(&["filter", "--gate", bad.to_str().unwrap()])), 1);
}

#[test]
fn filter_exit_codes() {
    let out = uent(&["filter", "--gate", "UH"]);
    assert_eq!(code(&out), 10);
    assert!(stdout(&out).contains("column 0"));
    assert_eq!(code(&uent(&["filter", "--gate", "X12"])), 10);
    assert_eq!(code(&uent(&["filter", "--gate", "UE4"])), 0);
}

#[test]
fn gate_emit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("f16.json");
    assert_eq!(code(&uent(&["gate", "emit", "F16", "--out", first.to_str().unwrap()])), 0);
    let g = read_gate_file(&first).unwrap();
    assert_eq!(g.dim(), 16);
    for z in g.matrix().as_slice() {
        assert!((z.norm() - 0.25).abs() < 1e-15);
    }

    let ue1 = dir.path().join("ue1.json");
    assert_eq!(code(&uent(&["gate", "emit", "UE1", "--out", ue1.to_str().unwrap()])), 0);
    let loaded = read_gate_file(&ue1).unwrap();
    assert_eq!(loaded.matrix(), qudit_entangler::gates::builtin("UE1").unwrap().matrix());

    // load then write again
    let again = dir.path().join("ue1b.json");
    qudit_entangler::report::write_gate_file(&loaded, loaded.shape().unwrap(), &again).unwrap();
    assert_eq!(std::fs::read(&ue1).unwrap(), std::fs::read(&again).unwrap());

    let uh = dir.path().join("uh.json");
    assert_eq!(code(&uent(&["gate", "emit", "UH", "--out", uh.to_str().unwrap()])), 0);
    let out = uent(&["filter", "--gate", uh.to_str().unwrap()]);
    assert_eq!(code(&out), 10);

    assert_eq!(code(&uent(&["gate", "emit", "NOPE"])), 1);
}

#[test]
fn check_records_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.jsonl");
    let args = |p: &Path| {
        vec![
            "check".to_string(),
            "--gate".into(),
            "SQRT_X12".into(),
            "--budget".into(),
            "20000".into(),
            "--restarts".into(),
            "3".into(),
            "--seed".into(),
            "5".into(),
            "--out".into(),
            p.to_str().unwrap().into(),
        ]
    };
    let a: Vec<String> = args(&out);
    let a: Vec<&str> = a.iter().map(String::as_str).collect();
    let c1 = code(&uent(&a));
    let c2 = code(&uent(&a));
    assert_eq!(c1, c2);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(strip_timestamp(lines[0]), strip_timestamp(lines[1]));
    let records = read_records(&out).unwrap();
    assert_eq!(records[0].restart_bests.len(), 3);
    assert_eq!(records[0].gate_label, "SQRT_X12");
    assert!(records[0].sqrt_branch.is_some());
    chrono::DateTime::parse_from_rfc3339(&records[0].timestamp).unwrap();
}

#[test]
fn min_ent_with_and_without_filter() {
    let out = uent(&["min-ent", "--gate", "UH"]);
    assert_eq!(code(&out), 10);
    let out = uent(&["min-ent", "--gate", "UH", "--skip-filter", "--budget", "30000", "--restarts", "2"]);
    assert_eq!(code(&out), 0);
    let line = stdout(&out).lines().last().unwrap().to_string();
    let rec: qudit_entangler::report::RunRecord = serde_json::from_str(&line).unwrap();
    assert!(rec.best_entanglement.unwrap().0 < 1e-8);

    let out = uent(&["min-ent", "--gate", "UE1", "--budget", "20000", "--restarts", "2"]);
    assert_eq!(code(&out), 0);
    let rec: qudit_entangler::report::RunRecord = serde_json::from_str(stdout(&out).lines().last().unwrap()).unwrap();
    assert!(rec.best_entanglement.unwrap().0 > 0.0);
    assert!(rec.best_state.is_some());
}

#[test]
fn distribution_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("uh.csv");
    let args = [
        "distribution",
        "--gate",
        "UH",
        "--samples",
        "3000",
        "--log-base",
        "2",
        "--seed",
        "4",
        "--out",
        csv.to_str().unwrap(),
    ];
    assert_eq!(code(&uent(&args)), 0);
    let first_csv = std::fs::read(&csv).unwrap();
    let summary = dir.path().join("uh.summary.json");
    let first_summary = std::fs::read(&summary).unwrap();
    assert_eq!(code(&uent(&args)), 0);
    assert_eq!(std::fs::read(&csv).unwrap(), first_csv);
    assert_eq!(std::fs::read(&summary).unwrap(), first_summary);

    let report: DistributionReport = serde_json::from_slice(&first_summary).unwrap();
    assert_eq!(report.sample_count, 3000);
    assert_eq!(report.histogram.len(), 60);
    let text = String::from_utf8(first_csv).unwrap();
    assert_eq!(text.lines().next(), Some("bin_lo,bin_hi,count"));
    let total: u64 = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 3000);
}

#[test]
fn kappa_prints_three_splits() {
    let out = uent(&["kappa"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for label in ["A|BC", "B|AC", "AB|C"] {
        assert!(text.contains(label));
    }
}
