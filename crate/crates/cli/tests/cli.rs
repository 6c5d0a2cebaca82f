use std::path::Path;
use std::process::{Command, Output};

fn ghzsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghzsim"))
        .args(args)
        .env_remove("GHZSIM_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().to_string())
        .collect()
}

#[test]
fn run_prints_ideal_probability() {
    let out = ghzsim(&["run", "--protocol", "conventional", "--n", "10"]);
    assert!(out.status.success());
    let p: f64 = column(&stdout(&out), "p_plus_y")[0].parse().unwrap();
    assert_eq!(format!("{p:.7}"), "0.5150774");
}

#[test]
fn run_honours_negative_delta() {
    let out = ghzsim(&[
        "run",
        "--protocol",
        "appendix",
        "--n",
        "2",
        "--delta",
        "-1e-6",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sum: f64 = column(&stdout(&out), "delta_sum")[0].parse().unwrap();
    assert_eq!(sum, -2e-6);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ghzsim(&[]).status.code(), Some(2));
    assert_eq!(ghzsim(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ghzsim(&["figures", "--which", "3"]).status.code(), Some(2));
    assert_eq!(
        ghzsim(&["run", "--protocol", "bogus", "--n", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ghzsim(&["check", "--oracle", "nothing"]).status.code(),
        Some(2)
    );
}

#[test]
fn unknown_config_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "detunin = 1e-5\n").unwrap();
    let out = ghzsim(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key 'detunin' (line 1)"));
}

#[test]
fn infeasible_run_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.cfg");
    std::fs::write(&cfg, "tau = 20\n").unwrap();
    let out = ghzsim(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--protocol",
        "composite",
        "--n",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_configured_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let table = dir.path().join("rows.tsv");
    std::fs::write(
        &cfg,
        format!(
            "protocols = conventional, appendix\nn_values = 1..4\nformat = tsv\noutput = {}\n",
            table.display()
        ),
    )
    .unwrap();
    let out = ghzsim(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(
        lines[0],
        "protocol\tN\ttau\tomega\tM\tt_ex\tlambda\tp_plus_y\test_mean\test_bias\test_std\trsd\theisenberg_ref\tdelta_sum\tseed"
    );
    assert!(lines[5].starts_with("appendix\t1\t"));
}

#[test]
fn seed_flag_changes_random_detunings_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("iid.cfg");
    std::fs::write(
        &cfg,
        "detuning = iid(0, 1e-5)\nn_values = 5\nprotocols = conventional\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = stdout(&ghzsim(&["sweep", "--config", cfg]));
    let b = stdout(&ghzsim(&["sweep", "--config", cfg, "--seed", "42"]));
    let c = stdout(&ghzsim(&["sweep", "--config", cfg, "--seed", "43"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn oracle_checks_pass() {
    for oracle in ["dense", "slope", "montecarlo"] {
        let out = ghzsim(&["check", "--oracle", oracle]);
        assert!(out.status.success(), "{oracle}: {}", stdout(&out));
        assert!(stdout(&out).contains("0 failed"));
    }
}

#[test]
fn figures_write_two_panels() {
    let dir = tempfile::tempdir().unwrap();
    let out = ghzsim(&[
        "figures",
        "--which",
        "1",
        "--n-max",
        "25",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for panel in ["fig1a.csv", "fig1b.csv"] {
        let text = std::fs::read_to_string(dir.path().join(panel)).unwrap();
        let protocols: std::collections::BTreeSet<_> =
            column(&text, "protocol").into_iter().collect();
        assert_eq!(protocols.len(), 3);
        assert_eq!(column(&text, "heisenberg_ref").len(), 75);
    }
    let listed = stdout(&out);
    assert!(listed.lines().all(|l| Path::new(l).exists()));
}

#[test]
fn thread_cap_is_respected_and_validated() {
    let base = Command::new(env!("CARGO_BIN_EXE_ghzsim"))
        .args(["run", "--protocol", "conventional", "--n", "3"])
        .env("GHZSIM_THREADS", "1")
        .output()
        .unwrap();
    assert!(base.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_ghzsim"))
        .args(["run", "--protocol", "conventional", "--n", "3"])
        .env("GHZSIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
