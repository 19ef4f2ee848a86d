//! Drives the installed binary end to end: exit codes, file layout,
//! flag overrides, and the self-test.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gwcover"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn cover_config(dir: &Path) -> String {
    format!(
        "experiment = \"cover\"\n\
         offspring = [0.0, 0.0, 1.0]\n\
         lambda = 2.0\n\
         n = 5\n\
         trials = 16\n\
         master_seed = 7\n\
         workers = 2\n\
         output_dir = \"{}\"\n",
        dir.join("out").display()
    )
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn gen_tree_run_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &cover_config(dir.path()));
    let out_dir = dir.path().join("out");

    let out = run_ok(bin().args(["gen-tree", "--config"]).arg(&cfg));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Z_n"), "gen-tree summary missing: {text}");
    assert!(out_dir.join("tree.txt").exists());

    run_ok(bin().args(["run", "--config"]).arg(&cfg));
    for name in ["cover.csv", "manifest.toml", "report.txt", "tree.txt"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }

    let out = run_ok(bin().args(["report", "--out"]).arg(&out_dir));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("KS vs Gumbel"), "report missing stats: {text}");
}

#[test]
fn seed_and_out_overrides_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &cover_config(dir.path()));
    let alt = dir.path().join("alt");
    run_ok(bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seed", "123", "--out"])
        .arg(&alt));
    let manifest = fs::read_to_string(alt.join("manifest.toml")).unwrap();
    assert!(manifest.contains("master_seed = 123"), "{manifest}");
}

#[test]
fn invalid_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    // Subcritical offspring law: rejected by validation.
    let body = cover_config(dir.path()).replace("[0.0, 0.0, 1.0]", "[0.5, 0.5]");
    let cfg = write_config(dir.path(), &body);
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));

    // Unparseable config.
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "experiment = \"cover\"\nlambda = ").unwrap();
    let out = bin().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["report", "--out"])
        .arg(dir.path().join("nowhere"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn selftest_passes_and_cleans_up() {
    let dir = tempfile::tempdir().unwrap();
    let scratch = dir.path().join("scratch");
    let out = run_ok(bin().args(["selftest", "--out"]).arg(&scratch));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
    assert!(!scratch.exists(), "selftest left scratch dir behind");
}
