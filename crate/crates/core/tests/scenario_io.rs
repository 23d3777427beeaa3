//! Scenario files, presets, snapshots, CSV output and run determinism.

use mhdbl::corpus::{rng, StateDraw};
use mhdbl::diagnostics::MonitorSample;
use mhdbl::grid::{Cutoff, Grid2D};
use mhdbl::io::{read_snapshot, read_timeseries, write_snapshot, Snapshot, SNAPSHOT_MAGIC};
use mhdbl::outer::{OuterFlow, TraceFamily};
use mhdbl::runner::{self, run_single, SNAPSHOT_DIR, SUMMARY_FILE, TIMESERIES_FILE};
use mhdbl::scenario::{load_scenario, load_scenario_or_preset, preset_names, Scenario, ECHO_FILE};
use mhdbl::Error;
use proptest::prelude::*;
use std::fs;

#[test]
fn every_preset_loads_and_validates() {
    let names: Vec<_> = preset_names().collect();
    assert!(names.len() >= 7);
    for n in names {
        let sc = Scenario::preset(n).unwrap();
        assert_eq!(sc.name, n);
        assert!(sc.preset.is_none());
    }
    assert!(Scenario::preset("nope").is_err());
}

#[test]
fn minimal_file_inherits_from_its_preset() {
    let sc = Scenario::from_toml("preset = \"zero\"\nname = \"mine\"\n", "inline").unwrap();
    let base = Scenario::preset("zero").unwrap();
    assert_eq!(sc.name, "mine");
    assert_eq!(sc.grid, base.grid);
    assert_eq!(sc.solver, base.solver);
}

#[test]
fn invalid_thresholds_are_rejected() {
    let text = "preset = \"zero\"\n[solver.thresholds]\ndelta0 = -1.0\n";
    let err = Scenario::from_toml(text, "inline").unwrap_err();
    assert!(matches!(err, Error::Scenario(_)), "{err}");
    assert!(err.to_string().contains("delta0"), "{err}");
}

#[test]
fn unknown_keys_and_bad_grids_are_rejected() {
    assert!(Scenario::from_toml("preset = \"zero\"\ncolour = 1\n", "inline").is_err());
    assert!(Scenario::from_toml("preset = \"zero\"\n[grid]\nnx = 7\n", "inline").is_err());
    assert!(Scenario::from_toml("preset = \"zero\"\n[crocco]\ntimes = [0.5, 0.25]\n", "inline").is_err());
}

#[test]
fn scenario_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for n in preset_names() {
        let sc = Scenario::preset(n).unwrap();
        let path = dir.path().join(format!("{n}.toml"));
        fs::write(&path, sc.to_toml().unwrap()).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), sc);
        assert_eq!(load_scenario_or_preset(path.to_str().unwrap()).unwrap(), sc);
    }
}

#[test]
fn scaling_multiplies_both_directions() {
    let sc = Scenario::preset("zero").unwrap();
    let g = sc.build_grid().unwrap();
    let f = sc.scaled(2).build_grid().unwrap();
    assert_eq!(f.nx, 2 * g.nx);
    assert_eq!(f.ny - 1, 2 * (g.ny - 1));
}

fn sample_snapshot() -> (Snapshot, Grid2D) {
    let g = Grid2D::new(16, 97, 12.0).unwrap();
    let s = StateDraw::random(&mut rng(2)).state(&g);
    let of = OuterFlow::from_family(&TraceFamily::Constant { u: 1.0, h: 1.0 });
    (Snapshot::from_state(&s, &of, &Cutoff::default(), &g), g)
}

#[test]
fn snapshots_round_trip_through_disk() {
    let (snap, _) = sample_snapshot();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.bin");
    write_snapshot(&snap, &p).unwrap();
    let back = read_snapshot(&p).unwrap();
    assert_eq!(back, snap);
    for name in ["u", "h", "u1", "h1"] {
        assert!(back.field(name).is_some(), "{name}");
    }
    let bytes = fs::read(&p).unwrap();
    assert_eq!(&bytes[..8], SNAPSHOT_MAGIC);
}

#[test]
fn damaged_snapshots_are_rejected() {
    let (snap, _) = sample_snapshot();
    let bytes = snap.to_bytes().unwrap();
    assert!(Snapshot::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(Snapshot::from_bytes(&extra).is_err());
    let mut bad = bytes;
    bad[0] = b'X';
    assert!(Snapshot::from_bytes(&bad).is_err());
}

fn zero_run_files(dir: &std::path::Path) -> (Vec<MonitorSample>, String) {
    let sc = Scenario::preset("zero").unwrap();
    let out = run_single(&sc, dir).unwrap();
    assert!(out.record.termination.completed());
    let rows = read_timeseries(&dir.join(TIMESERIES_FILE)).unwrap();
    assert_eq!(rows.len(), out.record.samples.len());
    (rows, fs::read_to_string(dir.join(TIMESERIES_FILE)).unwrap())
}

#[test]
fn zero_run_is_quiet_and_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (rows, text_a) = zero_run_files(a.path());
    let (_, text_b) = zero_run_files(b.path());
    assert_eq!(text_a, text_b);
    assert!(rows.iter().all(|r| r.energy == 0.0 && r.w1 == 0.0 && r.w2 == 0.0));
    assert!(a.path().join(ECHO_FILE).exists());
    assert!(a.path().join(SUMMARY_FILE).exists());
    assert!(a.path().join(SNAPSHOT_DIR).join("snap_00000.bin").exists());
    let echoed = load_scenario(&a.path().join(ECHO_FILE)).unwrap();
    assert_eq!(echoed, Scenario::preset("zero").unwrap());
}

#[test]
fn last_snapshot_reproduces_the_final_monitor_sample() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc = Scenario::preset("stability-demo").unwrap();
    sc.grid.nx = 16;
    sc.grid.ny = 385;
    sc.solver.t_end = 0.03;
    let out = run_single(&sc, dir.path()).unwrap();
    let snaps: Vec<_> = fs::read_dir(dir.path().join(SNAPSHOT_DIR)).unwrap().map(|e| e.unwrap().path()).collect();
    let last = snaps.iter().max().unwrap();
    let s = read_snapshot(last).unwrap().state().unwrap();
    let grid = sc.build_grid().unwrap();
    let m = mhdbl::diagnostics::monitor(
        &s,
        &sc.outer_flow(),
        &sc.cutoff().unwrap(),
        &sc.thresholds(),
        &grid,
        &sc.run_options().monitor,
        sc.solver.coefficients(),
    );
    let want = out.record.samples.last().unwrap();
    assert_eq!(m.energy, want.energy);
    assert_eq!(m.hmin, want.hmin);
}

#[test]
fn default_output_directories_are_distinct() {
    let root = std::path::Path::new("/tmp/r");
    let a = runner::output_dir(None, Some(root), "run-zero");
    let b = runner::output_dir(None, Some(root), "run-stability-demo");
    assert_ne!(a, b);
    let explicit = std::path::Path::new("/x/y");
    assert_eq!(runner::output_dir(Some(explicit), Some(root), "run-zero"), explicit);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn snapshot_bytes_round_trip(seed in 0u64..1000, t in 0.0f64..10.0) {
        let g = Grid2D::new(8, 33, 12.0).unwrap();
        let mut s = StateDraw::random(&mut rng(seed)).state(&g);
        s.t = t;
        let snap = Snapshot::from_state(&s, &OuterFlow::zero(), &Cutoff::default(), &g);
        let back = Snapshot::from_bytes(&snap.to_bytes().unwrap()).unwrap();
        prop_assert_eq!(back.state().unwrap(), s);
    }
}
