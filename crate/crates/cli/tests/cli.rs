use std::path::Path;
use std::process::{Command, Output};

fn hsfluct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsfluct"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    let body = format!(
        "# small grid\nepsilon = 0.12, 0.1\nt = 0.2\nreplicas = 100\ncentering_replicas = 100\n\
         semigroup_samples = 2000\nplots = false\noutput = {}\n",
        dir.join("out").display()
    );
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn experiment_commands_require_a_seed() {
    for cmd in [
        "simulate",
        "covariance",
        "semigroup",
        "pseudotest",
        "diagnostics",
    ] {
        let out = hsfluct(&[cmd, "--epsilon", "0.12"]);
        assert_eq!(code(&out), 1, "{cmd}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
    }
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    assert_eq!(code(&hsfluct(&["frobnicate"])), 1);
    assert_eq!(
        code(&hsfluct(&["simulate", "--seed", "1", "--epsilon", "0.5"])),
        1
    );
    assert_eq!(
        code(&hsfluct(&[
            "simulate",
            "--seed",
            "1",
            "--config",
            "/nonexistent"
        ])),
        1
    );
    assert_eq!(code(&hsfluct(&["--help"])), 0);
}

#[test]
fn simulate_writes_an_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sim");
    let out = hsfluct(&[
        "simulate",
        "--seed",
        "3",
        "--epsilon",
        "0.1",
        "--t",
        "0.3",
        "--output",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("events.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("time,"), "{header}");
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    let columns = header.split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == columns));
}

#[test]
fn covariance_then_report_reproduces_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = hsfluct(&["covariance", "--config", &cfg, "--seed", "9"]);
    assert!(
        matches!(code(&out), 0 | 2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let first = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert_eq!(first.lines().count(), 3);

    let again = dir.path().join("again");
    let out = hsfluct(&[
        "report",
        "--manifest",
        dir.path().join("out/manifest.json").to_str().unwrap(),
        "--output",
        again.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read_to_string(again.join("report.csv")).unwrap(),
        first
    );
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = hsfluct(&[
        "covariance",
        "--config",
        &cfg,
        "--seed",
        "9",
        "--epsilon",
        "0.12",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn semigroup_exit_code_reflects_the_oracle_comparison() {
    let agree = hsfluct(&[
        "semigroup",
        "--seed",
        "1",
        "--h",
        "v1",
        "--g",
        "energy",
        "--t",
        "0.5",
        "--semigroup_samples",
        "4000",
        "--oracle",
    ]);
    assert_eq!(code(&agree), 0, "{}", stdout(&agree));
    // one generation is far too few at t = 1.5
    let truncated = hsfluct(&[
        "semigroup",
        "--seed",
        "1",
        "--h",
        "v1v2",
        "--g",
        "v1v2",
        "--t",
        "1.5",
        "--n_max",
        "1",
        "--semigroup_samples",
        "4000",
        "--oracle",
    ]);
    assert_eq!(code(&truncated), 2, "{}", stdout(&truncated));
    assert!(stdout(&truncated).contains("MISMATCH"));
}

#[test]
fn pseudotest_passes_on_a_few_systems() {
    let out = hsfluct(&[
        "pseudotest",
        "--seed",
        "5",
        "--epsilon",
        "0.1",
        "--t",
        "0.3",
        "--systems",
        "3",
        "--semigroup_samples",
        "4000",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("duality (deflect -1)"));
}

#[test]
fn diagnostics_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = hsfluct(&[
        "diagnostics",
        "--seed",
        "2",
        "--epsilon",
        "0.12,0.08",
        "--t",
        "0.5",
        "--replicas",
        "100",
        "--centering_replicas",
        "100",
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("diagnostics.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
}
