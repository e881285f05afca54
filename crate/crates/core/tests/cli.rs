mod common;

use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_persona-dialogue"))
        .arg("--config")
        .arg(common::fixture("pipeline.toml"))
        .arg("--output-dir")
        .arg(out_dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn ingest_writes_summary_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["ingest"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("retained 20 of 20"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ingest_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["conversations_retained"], 20);
    assert_eq!(summary["speakers_retained"], 40);
    let first = std::fs::read(dir.path().join("corpus.jsonl")).unwrap();
    assert_eq!(bin(&["ingest"], dir.path()).status.code(), Some(0));
    assert_eq!(std::fs::read(dir.path().join("corpus.jsonl")).unwrap(), first);
}

#[test]
fn extract_reuses_its_cache() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["extract"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("extracted 40 personas"));
    let cached = bin(&["extract"], dir.path());
    assert!(stdout(&cached).contains("persona cache hit"), "{}", stdout(&cached));
    let forced = bin(&["extract", "--force"], dir.path());
    assert!(stdout(&forced).contains("extracted 40 personas"));
}

#[test]
fn simulate_is_reproducible_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let a = tempfile::tempdir().unwrap();
    for d in [dir.path(), a.path()] {
        let o = bin(&["simulate", "--variants", "best", "--name", "run"], d);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let jsonl = |d: &Path| std::fs::read(d.join("dialogues/run.jsonl")).unwrap();
    assert_eq!(jsonl(dir.path()), jsonl(a.path()));
    let dialogues = dir.path().join("dialogues/run.jsonl");
    let o = bin(&["evaluate", "--dialogues", dialogues.to_str().unwrap(), "--name", "run"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("Scalar features"));
    assert!(dir.path().join("reports/run.json").exists());
    assert!(dir.path().join("reports/run.csv").exists());
    let report = format!("run={}", dir.path().join("reports/run.json").display());
    let o = bin(&["--level", "turn", "report", &report], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("length") && !text.lines().any(|l| l.starts_with("age ")), "{text}");
}

#[test]
fn evaluate_from_identical_stats_reports_zero_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("stats.csv");
    std::fs::write(
        &csv,
        "feature,condition,human_mean,generated_mean,human_std,generated_std\nage,same,19.62,19.62,4.0,4.0\n",
    )
    .unwrap();
    let o = bin(&["evaluate", "--stats", csv.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let row = stdout(&o).lines().find(|l| l.starts_with("age")).unwrap().to_string();
    assert!(row.ends_with("0.00                 0.00"), "{row}");
}

#[test]
fn missing_lexicon_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        format!(
            "[corpus]\npath = {:?}\n\n[lexica]\nage = \"missing/age.csv\"\n",
            common::fixture("corpus/synthetic20.jsonl")
        ),
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_persona-dialogue"))
        .arg("--config")
        .arg(&config)
        .arg("ingest")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("age.csv"));
}

#[test]
fn bad_backend_and_bad_variants_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin(&["--backend", "carrier-pigeon", "ingest"], dir.path()).status.code(), Some(2));
    let o = bin(&["simulate", "--variants", "formality=Z"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
