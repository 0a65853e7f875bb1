use std::path::Path;
use std::process::{Command, Output};

fn relaybf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaybf")).args(args).output().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn sinr_vs_m_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = relaybf(&[
        "sinr-vs-m",
        "--trials",
        "8",
        "--grid",
        "3,4",
        "--algorithms",
        "resrs,rgsrs",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,resrs_mean,resrs_stderr,rgsrs_mean,rgsrs_stderr");
    assert_eq!(lines.len(), 3);
    let xs: Vec<f64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(xs, [3.0, 4.0]);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 1);
    assert!(manifest["solver_calls"]["resrs"]["max"].as_u64().unwrap() >= 1);
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = relaybf(&[
            "ber-vs-snr",
            "--bits",
            "3000",
            "--grid",
            "0,10",
            "--seed",
            "5",
            "--threads",
            threads,
            "--out",
            &out_arg(dir.path()),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(
        std::fs::read(a.path().join("curve.csv")).unwrap(),
        std::fs::read(b.path().join("curve.csv")).unwrap()
    );
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "m = 5\nm_min = 2\ntrials = 4\nx_grid = [10]\nalgorithms = [\"none\"]\n").unwrap();
    let out = relaybf(&[
        "sinr-vs-snr",
        "--config",
        cfg.to_str().unwrap(),
        "--m",
        "4",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["spec"]["base"]["m"], 4);
    assert_eq!(manifest["spec"]["base"]["m_min"], 2);
}

#[test]
fn validation_errors_exit_one_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = relaybf(&["sinr-vs-snr", "--m", "4", "--m-min", "6", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m_min"));

    let out = relaybf(&["sinr-vs-snr", "--mode", "guess", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(1));

    let out = relaybf(&["sinr-vs-snr", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "relays = 4\n").unwrap();
    let out = relaybf(&["sinr-vs-snr", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("relays"));
}

#[test]
fn trace_lists_greedy_iterations() {
    let out = relaybf(&["trace", "--m", "6", "--m-min", "2", "--seed", "3", "--trial", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("iteration,removed,mask,sinr_db,accepted"));
    assert!(text.lines().any(|l| l.starts_with("0,-,111111,")));
    assert_eq!(text.lines().filter(|l| l.starts_with("relay,")).count(), 1);
}
