use std::process::Command;

use uniopt_bench::parse_csv;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uniopt-bench"))
}

#[test]
fn usage_errors_exit_2_and_name_the_flag() {
    let out = bench().args(["--thresholds", "1e-1,1e0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--thresholds"));
    let out = bench().args(["--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_defaults() {
    let out = bench().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[default: 5000]") && text.contains("--config"));
}

#[test]
fn config_file_with_flag_override_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.cfg");
    let csv = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        "problem = svm\nalgs = pg,uag\nm = 20\nn = 30\ninstances = 2\nthresholds = 1,1e-1\nmax_iters = 50\nformat = csv\n",
    )
    .unwrap();
    let status = bench()
        .args(["--config", cfg.to_str().unwrap(), "--problem", "scad", "--output", csv.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let records = parse_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(records.len(), 2 * 2);
    assert!(records.iter().all(|r| r.problem == "scad" && r.m == 20 && r.mean_er.is_none()));
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = red\n").unwrap();
    let out = bench().args(["--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn markdown_to_stdout() {
    let out = bench()
        .args(["--algs", "pg,ufapl", "--m", "20", "--n", "30", "--instances", "1", "--thresholds", "1,1e-1,1e-2", "--max-iters", "100"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with('|')).count(), 2 * 3 + 2);
    assert!(text.contains("L estimates"));
}
