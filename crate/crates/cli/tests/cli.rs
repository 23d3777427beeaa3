use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mhdbl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhdbl"))
        .args(args)
        .env_remove("MHDBL_OUT")
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn presets_are_listed() {
    let o = mhdbl(&["presets"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    for p in ["stability-demo", "no-magnetic", "epsilon-family", "manufactured", "crocco-validate", "uniqueness", "zero"] {
        assert!(out.lines().any(|l| l == p), "{p} missing from {out}");
    }
}

#[test]
fn zero_run_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z");
    let o = mhdbl(&["run", "--scenario", "zero", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    for f in ["scenario.toml", "timeseries.csv", "summary.toml", "snapshots"] {
        assert!(out.join(f).exists(), "{f}");
    }
    // without the majorant fields the comparison has nothing to work with
    let o = mhdbl(&["majorant", "--run", out.to_str().unwrap(), "--C", "1e-20"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
}

#[test]
fn out_root_names_the_default_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhdbl(&["--quiet", "--out-root", dir.path().to_str().unwrap(), "run", "--scenario", "zero"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(o.stdout.is_empty());
    assert!(dir.path().join("run-zero").join("timeseries.csv").exists());
}

fn short_demo(dir: &Path) -> std::path::PathBuf {
    let file = dir.join("short.toml");
    fs::write(
        &file,
        "preset = \"stability-demo\"\nname = \"short\"\n[grid]\nnx = 16\nny = 385\n[solver]\nt_end = 0.03\n",
    )
    .unwrap();
    file
}

#[test]
fn majorant_can_be_recomputed_for_a_finished_run() {
    let dir = tempfile::tempdir().unwrap();
    let file = short_demo(dir.path());
    let run = dir.path().join("run");
    let o = mhdbl(&["run", "--scenario", file.to_str().unwrap(), "--out", run.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    fs::remove_file(run.join("majorant.csv")).unwrap();
    let o = mhdbl(&["majorant", "--run", run.to_str().unwrap(), "--C", "1e-20"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("comparison with C = 1e-20"), "{}", text(&o));
    assert!(run.join("majorant.csv").exists());
}

#[test]
fn bad_invocations_exit_with_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    assert_eq!(mhdbl(&["majorant", "--run", missing.to_str().unwrap(), "--C", "1"]).status.code(), Some(2));
    assert_eq!(mhdbl(&["run", "--scenario", "no-such-preset"]).status.code(), Some(2));
    let out = dir.path().join("v");
    assert_eq!(mhdbl(&["verify", "--suite", "everything", "--out", out.to_str().unwrap()]).status.code(), Some(2));
    let file = short_demo(dir.path());
    let o = mhdbl(&["uniqueness", "--scenario", file.to_str().unwrap(), "--d=-1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("--d"));
}

#[test]
fn empty_inequality_corpus_warns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = mhdbl(&["verify", "--suite", "inequalities", "--count", "0", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}
