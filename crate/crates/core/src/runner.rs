//! Command orchestration: each entry point runs one experiment from a
//! resolved scenario and writes its artifacts into a directory of its own.
//!
//! Every directory receives the resolved scenario echo. File names:
//!
//! | command          | files                                                        |
//! |------------------|--------------------------------------------------------------|
//! | run              | `timeseries.csv`, `summary.toml`, `snapshots/*.bin`, `majorant.csv` |
//! | run (ε family)   | `eps_<k>/...` as above, `epsilon_distances.csv`               |
//! | crocco-compare   | `crocco.csv`                                                  |
//! | uniqueness       | `uniqueness.csv`, `uniqueness_summary.csv`                    |
//! | majorant         | `majorant.csv` (inside the run directory)                     |
//! | convergence      | `convergence.csv`                                             |
//! | verify           | `margins.csv`, `checks.csv`                                   |

use crate::constants;
use crate::convergence::{standard_studies, ConvergenceTable, SolverKind};
use crate::corpus::{rng, StateDraw};
use crate::diagnostics::{energy_comparison, majorant_series, uniqueness_experiment, MajorantComparison, UniquenessReport};
use crate::error::{Error, Result};
use crate::fields::{validate_initial, InitialFamily, State, ValidationReport};
use crate::grid::Grid2D;
use crate::inequalities::MarginReport;
use crate::io::{self, Snapshot};
use crate::mms::{AnalyticState, ManufacturedPair};
use crate::scenario::{Scenario, ECHO_FILE};
use crate::solver::{crocco_compare, run_primal, CroccoComparison, PrimalSolver, RunRecord};
use crate::verify::{run_suite, Suite, SuiteReport, VerifyOptions};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const MAJORANT_FILE: &str = "majorant.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Checks the initial data. Positivity and the weighted bounds are only
/// required when the run enforces positivity; manufactured data carry their
/// own far-field values.
pub fn check_initial(sc: &Scenario, s0: &State, grid: &Grid2D) -> Result<ValidationReport> {
    let report = validate_initial(s0, &sc.outer_flow(), &sc.cutoff()?, &sc.thresholds(), grid);
    let relaxed = ValidationReport {
        positivity_ok: report.positivity_ok || !sc.solver.enforce_positivity,
        bounds_ok: report.bounds_ok || !sc.solver.enforce_positivity,
        far_ok: report.far_ok || matches!(sc.initial, InitialFamily::Manufactured),
        ..report.clone()
    };
    let failures = relaxed.failures();
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(Error::Scenario(format!("initial data rejected: {}", failures.join("; "))))
    }
}

/// A validated solver for the scenario; manufactured initial data bring
/// their forcing along.
pub fn build_solver(sc: &Scenario) -> Result<PrimalSolver> {
    let grid = sc.build_grid()?;
    let s0 = sc.initial_state(&grid)?;
    check_initial(sc, &s0, &grid)?;
    let solver = PrimalSolver::new(s0, sc.outer_flow(), sc.cutoff()?, grid, sc.solver)?;
    Ok(match sc.initial {
        InitialFamily::Manufactured => solver.with_forcing(Arc::new(ManufacturedPair::default())),
        _ => solver,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub termination: String,
    pub steps: usize,
    pub t_final: f64,
    pub samples: usize,
    pub hmin_min: f64,
    pub energy_initial: f64,
    pub energy_max: f64,
    pub energy_final: f64,
    /// `L^2` error against the exact solution, for manufactured runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manufactured_error: Option<f64>,
    /// Whether `E^2 <= z` held with the frozen majorant constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub majorant_holds: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub summary: RunSummary,
    pub majorant: Option<MajorantComparison>,
}

/// Runs one scenario (ignoring any ε family) and writes its artifacts.
pub fn run_single(sc: &Scenario, out: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out)?;
    sc.write_echo(out)?;
    let mut solver = build_solver(sc)?;
    let record = run_primal(&mut solver, &sc.run_options())?;
    let grid = solver.grid().clone();
    let (of, c) = (sc.outer_flow(), sc.cutoff()?);

    io::write_timeseries(&record.samples, &out.join(TIMESERIES_FILE))?;
    let snap_dir = out.join(SNAPSHOT_DIR);
    std::fs::create_dir_all(&snap_dir)?;
    for (k, s) in record.snapshots.iter().enumerate() {
        io::write_snapshot(&Snapshot::from_state(s, &of, &c, &grid), &snap_dir.join(format!("snap_{k:05}.bin")))?;
    }

    let majorant = if sc.monitor.majorant && majorant_series(&record.samples).is_some() {
        let cmp = energy_comparison(&record.samples, constants::C_MAJORANT, sc.thresholds().delta0)?;
        write_majorant(&record.samples, &cmp, &out.join(MAJORANT_FILE))?;
        Some(cmp)
    } else {
        None
    };

    let manufactured_error = matches!(sc.initial, InitialFamily::Manufactured).then(|| {
        let fin = &record.final_state;
        fin.distance(&ManufacturedPair::default().state(&grid, fin.t), &grid)
    });
    let summary = RunSummary {
        name: sc.name.clone(),
        termination: record.termination.label().to_string(),
        steps: record.steps,
        t_final: record.final_state.t,
        samples: record.samples.len(),
        hmin_min: record.samples.iter().map(|s| s.hmin).fold(f64::INFINITY, f64::min),
        energy_initial: record.samples.first().map_or(0.0, |s| s.energy),
        energy_max: record.samples.iter().map(|s| s.energy).fold(0.0, f64::max),
        energy_final: record.samples.last().map_or(0.0, |s| s.energy),
        manufactured_error,
        majorant_holds: majorant.as_ref().map(|m| m.holds),
    };
    std::fs::write(
        out.join(SUMMARY_FILE),
        toml::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?,
    )?;
    Ok(RunOutcome {
        record,
        summary,
        majorant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorantRow {
    pub t: f64,
    pub e2: f64,
    pub z: Option<f64>,
    pub margin: Option<f64>,
}

fn write_majorant(samples: &[crate::diagnostics::MonitorSample], cmp: &MajorantComparison, path: &Path) -> Result<()> {
    let rows: Vec<MajorantRow> = samples
        .iter()
        .zip(cmp.report.z.iter().zip(&cmp.margins))
        .map(|(s, (z, m))| MajorantRow {
            t: s.t,
            e2: s.energy * s.energy,
            z: *z,
            margin: *m,
        })
        .collect();
    io::write_csv(&rows, path)
}

/// Recomputes the majorant comparison of a finished run with constant `c`
/// and writes it into the run directory.
pub fn majorant_for_run(dir: &Path, c: f64) -> Result<MajorantComparison> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("majorant constant {c} must be positive")));
    }
    let sc = crate::scenario::load_scenario(&dir.join(ECHO_FILE))?;
    let samples = io::read_timeseries(&dir.join(TIMESERIES_FILE))?;
    if majorant_series(&samples).is_none() {
        return Err(Error::Format(format!(
            "{} lacks the majorant columns (run with monitor.majorant = true)",
            dir.join(TIMESERIES_FILE).display()
        )));
    }
    let cmp = energy_comparison(&samples, c, sc.thresholds().delta0)?;
    write_majorant(&samples, &cmp, &dir.join(MAJORANT_FILE))?;
    Ok(cmp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonDistanceRow {
    pub eps_a: f64,
    pub eps_b: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonFamilyReport {
    pub values: Vec<f64>,
    pub terminations: Vec<String>,
    /// All pairwise final-state distances.
    pub pairs: Vec<EpsilonDistanceRow>,
    /// Distances between consecutive values.
    pub consecutive: Vec<f64>,
}

impl EpsilonFamilyReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.consecutive.windows(2).all(|w| w[1] < w[0])
    }
}

/// One run per `eps` value into `out/eps_<k>`, then the distances between
/// their final states.
pub fn run_epsilon_family(sc: &Scenario, values: &[f64], out: &Path) -> Result<EpsilonFamilyReport> {
    std::fs::create_dir_all(out)?;
    sc.write_echo(out)?;
    let mut finals: Vec<State> = Vec::new();
    let mut terminations = Vec::new();
    for (k, &eps) in values.iter().enumerate() {
        let mut one = sc.clone();
        one.epsilon = None;
        one.solver.eps = eps;
        one.name = format!("{} eps={eps:e}", sc.name);
        let o = run_single(&one, &out.join(format!("eps_{k}")))?;
        if !o.record.termination.completed() {
            return Err(Error::Scenario(format!(
                "run with eps = {eps:e} ended early: {}",
                o.record.termination.label()
            )));
        }
        terminations.push(o.summary.termination);
        finals.push(o.record.final_state);
    }
    let grid = sc.build_grid()?;
    let mut pairs = Vec::new();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            pairs.push(EpsilonDistanceRow {
                eps_a: values[i],
                eps_b: values[j],
                distance: finals[i].distance(&finals[j], &grid),
            });
        }
    }
    let consecutive = finals.windows(2).map(|w| w[0].distance(&w[1], &grid)).collect();
    io::write_csv(&pairs, &out.join("epsilon_distances.csv"))?;
    Ok(EpsilonFamilyReport {
        values: values.to_vec(),
        terminations,
        pairs,
        consecutive,
    })
}

#[derive(Debug, Clone)]
pub enum ScenarioOutcome {
    Single(Box<RunOutcome>),
    Family(EpsilonFamilyReport),
}

/// The `run` command: a single run, or the whole family when the scenario
/// lists `epsilon.values`.
pub fn run_scenario(sc: &Scenario, out: &Path) -> Result<ScenarioOutcome> {
    match &sc.epsilon {
        Some(e) => Ok(ScenarioOutcome::Family(run_epsilon_family(sc, &e.values, out)?)),
        None => Ok(ScenarioOutcome::Single(Box::new(run_single(sc, out)?))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CroccoRow {
    pub t: f64,
    pub distance_u: f64,
    pub distance_h: f64,
    pub distance: f64,
    pub flux_margin: f64,
}

pub fn crocco_scenario(sc: &Scenario, out: &Path) -> Result<CroccoComparison> {
    std::fs::create_dir_all(out)?;
    sc.write_echo(out)?;
    let grid = sc.build_grid()?;
    let s0 = sc.initial_state(&grid)?;
    check_initial(sc, &s0, &grid)?;
    let cmp = crocco_compare(&s0, &sc.outer_flow(), &sc.cutoff()?, &grid, &sc.solver, sc.n_eta(), &sc.crocco.times)?;
    let rows: Vec<CroccoRow> = (0..cmp.times.len())
        .map(|k| CroccoRow {
            t: cmp.times[k],
            distance_u: cmp.distance_u[k],
            distance_h: cmp.distance_h[k],
            distance: cmp.distance[k],
            flux_margin: cmp.flux_margin[k],
        })
        .collect();
    io::write_csv(&rows, &out.join("crocco.csv"))?;
    Ok(cmp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessRow {
    pub d: f64,
    pub t: f64,
    pub n: f64,
    pub tpsi_residual: f64,
    pub hardy_lhs: f64,
    pub hardy_rhs: f64,
    pub sup_a: f64,
    pub sup_b: f64,
    pub sup_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessSummaryRow {
    pub d: f64,
    pub c_hat: Option<f64>,
    pub n_max: f64,
}

/// Runs the difference experiment for sizes `0`, `d` and `d / 2`.
pub fn uniqueness_scenario(sc: &Scenario, d: f64, out: &Path) -> Result<Vec<UniquenessReport>> {
    std::fs::create_dir_all(out)?;
    sc.write_echo(out)?;
    let grid = sc.build_grid()?;
    let s0 = sc.initial_state(&grid)?;
    check_initial(sc, &s0, &grid)?;
    let pert = StateDraw::random(&mut rng(sc.seed)).state(&grid);
    let reports = uniqueness_experiment(
        &s0,
        &pert,
        &[0.0, d, 0.5 * d],
        &sc.outer_flow(),
        &sc.cutoff()?,
        &grid,
        &sc.solver,
        sc.uniqueness.sample_every,
    )?;
    let rows: Vec<UniquenessRow> = reports
        .iter()
        .flat_map(|r| {
            r.samples.iter().map(move |s| UniquenessRow {
                d: r.d,
                t: s.t,
                n: s.n,
                tpsi_residual: s.tpsi_residual,
                hardy_lhs: s.hardy_lhs,
                hardy_rhs: s.hardy_rhs,
                sup_a: s.sup_a,
                sup_b: s.sup_b,
                sup_c: s.sup_c,
            })
        })
        .collect();
    io::write_csv(&rows, &out.join("uniqueness.csv"))?;
    let summary: Vec<UniquenessSummaryRow> = reports
        .iter()
        .map(|r| UniquenessSummaryRow {
            d: r.d,
            c_hat: r.c_hat,
            n_max: r.samples.iter().map(|s| s.n).fold(0.0, f64::max),
        })
        .collect();
    io::write_csv(&summary, &out.join("uniqueness_summary.csv"))?;
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub solver: SolverKind,
    pub axis: crate::convergence::Axis,
    pub scheme: crate::solver::Scheme,
    pub h: f64,
    pub error: f64,
    /// Observed order against the previous level (empty on the first).
    pub order: Option<f64>,
}

pub fn convergence_rows(tables: &[ConvergenceTable]) -> Vec<ConvergenceRow> {
    tables
        .iter()
        .flat_map(|t| {
            (0..t.h.len()).map(move |k| ConvergenceRow {
                solver: t.kind,
                axis: t.axis,
                scheme: t.scheme,
                h: t.h[k],
                error: t.errors[k],
                order: k.checked_sub(1).map(|j| t.orders[j]),
            })
        })
        .collect()
}

/// Standard manufactured-solution studies of both solvers.
pub fn convergence_suite(scale: usize, out: &Path) -> Result<Vec<ConvergenceTable>> {
    std::fs::create_dir_all(out)?;
    let mut tables = standard_studies(SolverKind::Primal, scale)?;
    tables.extend(standard_studies(SolverKind::Crocco, scale)?);
    io::write_csv(&convergence_rows(&tables), &out.join("convergence.csv"))?;
    Ok(tables)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Runs a verification suite and writes the margin table and the checks.
pub fn verify_to(which: Suite, opts: &VerifyOptions, out: &Path) -> Result<SuiteReport> {
    std::fs::create_dir_all(out)?;
    let report = run_suite(which, opts)?;
    write_margins(&report.margins, &out.join("margins.csv"))?;
    let rows: Vec<CheckRow> = report
        .checks
        .iter()
        .map(|c| CheckRow {
            name: c.name.clone(),
            pass: c.pass,
            detail: c.detail.clone(),
        })
        .collect();
    io::write_csv(&rows, &out.join("checks.csv"))?;
    Ok(report)
}

fn write_margins(margins: &[MarginReport], path: &Path) -> Result<()> {
    let mut text = String::from(MarginReport::CSV_HEADER);
    text.push('\n');
    for m in margins {
        text.push_str(&m.csv_row());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Output directory: the explicit one, else `<root>/<name>` with the root
/// from the environment or the working directory.
pub fn output_dir(explicit: Option<&Path>, root: Option<&Path>, name: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => root.unwrap_or_else(|| Path::new("runs")).join(name),
    }
}
