use std::process::Command;

fn evosim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_evosim")).args(args).env("EVOSIM_LOG_LEVEL", "error").output().unwrap()
}

#[test]
fn simulate_writes_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["simulate", "--output", out, "--seed", "4", "--workers", "1"];
    let o = evosim(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with("# effective config"));
    let run = stdout.lines().find_map(|l| l.strip_prefix("run_dir=")).unwrap();
    for f in ["config.toml", "report.txt", "perf.txt", "snapshots.csv"] {
        assert!(std::path::Path::new(run).join(f).exists(), "{f}");
    }
    // Existing run directory without --force.
    assert_eq!(evosim(&args).status.code(), Some(1));
    assert!(evosim(&[&args[..], &["--force"]].concat()).status.success());
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    assert_eq!(evosim(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(evosim(&["simulate", "--workers", "x"]).status.code(), Some(1));
    let o = evosim(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/run.toml"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\nworkers = \"many\"\n").unwrap();
    let o = evosim(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.toml:2"), "{}", String::from_utf8_lossy(&o.stderr));

    let o = evosim(&["calibrate", "--reference", "/nonexistent/ref.csv", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ref.csv"));
}

#[test]
fn bench_prints_one_line_per_rate() {
    let o = evosim(&["bench", "--rates", "100,200", "--duration", "2", "--assets", "2", "--workers", "1"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = stdout.lines().filter(|l| l.starts_with("rate=")).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("emitted=400"), "{}", lines[0]);
    assert!(lines[1].contains("emitted=800"), "{}", lines[1]);
}
