use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn langsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_langsynth")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = langsynth(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TINY_RUN: [&str; 14] = [
    "--iterations", "1", "--batch-size", "6", "--budget", "3000", "--recognition-steps", "40",
    "--dreams", "5", "--eval-interval", "1", "--mode", "laps",
];

fn generate(dir: &Path) -> std::path::PathBuf {
    let data = dir.join("data.jsonl");
    ok(&["generate", "--domain", "strings", "--train", "6", "--test", "3", "--examples", "4", "--seed", "2", "--out", path(&data)]);
    data
}

#[test]
fn generate_is_deterministic_and_writes_one_task_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path());
    let first = fs::read_to_string(&a).unwrap();
    assert_eq!(first.lines().count(), 9);
    let b = generate(dir.path());
    assert_eq!(fs::read_to_string(b).unwrap(), first);
}

#[test]
fn run_evaluate_and_report_work_together() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    let run_dir = dir.path().join("run");
    let mut args = vec!["run", "--dataset", path(&data), "--out", path(&run_dir), "--domain", "strings"];
    args.extend(TINY_RUN);
    ok(&args);

    for artifact in ["config.json", "checkpoint.json", "metrics.tsv", "grammar.txt", "compression.log"] {
        assert!(run_dir.join(artifact).exists(), "{artifact} missing");
    }
    let metrics = fs::read_to_string(run_dir.join("metrics.tsv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);

    let checkpoint = run_dir.join("checkpoint.json");
    let rate: f64 = ok(&[
        "evaluate", "--domain", "strings", "--dataset", path(&data), "--checkpoint", path(&checkpoint),
        "--budget", "3000", "--no-language",
    ])
    .trim()
    .parse()
    .unwrap();
    assert!((0.0..=1.0).contains(&rate));

    let summary = dir.path().join("summary.tsv");
    let printed = ok(&["report", path(&run_dir), "--out", path(&summary)]);
    assert!(printed.contains("laps"));
    let rows = fs::read_to_string(summary).unwrap();
    assert_eq!(rows.lines().count(), 2);

    // The run is complete, so resuming with the same flags leaves the metrics untouched.
    let mut again = args.clone();
    again.push("--resume");
    ok(&again);
    assert_eq!(fs::read_to_string(run_dir.join("metrics.tsv")).unwrap(), metrics);
}

#[test]
fn resume_with_a_different_configuration_fails() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    let run_dir = dir.path().join("run");
    let mut args = vec!["run", "--dataset", path(&data), "--out", path(&run_dir), "--domain", "strings"];
    args.extend(TINY_RUN);
    ok(&args);

    let mut changed = args.clone();
    changed.extend(["--seed", "7", "--resume"]);
    let out = langsynth(&changed);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("same configuration"));
}

#[test]
fn invalid_flags_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path());
    let run_dir = dir.path().join("run");
    let out = langsynth(&[
        "run", "--dataset", path(&data), "--out", path(&run_dir), "--domain", "strings", "--batch-size", "0",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("batch_size"));

    let out = langsynth(&["run", "--dataset", path(&data), "--out", path(&run_dir), "--mode", "nonsense"]);
    assert!(!out.status.success());
}
