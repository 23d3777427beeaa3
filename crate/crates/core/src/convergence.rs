//! Manufactured-solution convergence studies for both solvers.

use crate::error::Result;
use crate::grid::{Cutoff, Grid2D};
use crate::mms::{AnalyticState, ManufacturedPair};
use crate::ops::{self, observed_order, Field};
use crate::outer::{OuterFlow, TraceFamily};
use crate::solver::crocco::{CroccoAnalytic, CroccoManufactured, CroccoSolver};
use crate::solver::{PrimalSolver, Scheme, SolverConfig};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Height of the primal domain in the studies.
pub const PRIMAL_Y_MAX: f64 = 12.0;
/// Height of the Crocco domain in the studies.
pub const CROCCO_ETA_MAX: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Primal,
    Crocco,
}

impl SolverKind {
    pub fn label(&self) -> &'static str {
        match self {
            SolverKind::Primal => "primal",
            SolverKind::Crocco => "crocco",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Space,
    Time,
}

impl Axis {
    pub fn label(&self) -> &'static str {
        match self {
            Axis::Space => "space",
            Axis::Time => "time",
        }
    }
}

/// Errors against a sequence of spacings halving at each level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub kind: SolverKind,
    pub axis: Axis,
    pub scheme: Scheme,
    /// `dx` for spatial studies, `dt` for temporal ones.
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    /// Observed order between consecutive levels.
    pub orders: Vec<f64>,
}

impl ConvergenceTable {
    fn new(kind: SolverKind, axis: Axis, scheme: Scheme, h: Vec<f64>, errors: Vec<f64>) -> Self {
        let orders = errors
            .windows(2)
            .zip(h.windows(2))
            .map(|(e, h)| observed_order(e[0], e[1], h[0] / h[1]))
            .collect();
        Self {
            kind,
            axis,
            scheme,
            h,
            errors,
            orders,
        }
    }

    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Least-squares slope of `log error` against `log h`.
    pub fn fitted_slope(&self) -> f64 {
        let n = self.h.len() as f64;
        let xs: Vec<f64> = self.h.iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = self.errors.iter().map(|v| v.ln()).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    }
}

fn mms_config(scheme: Scheme, dt: f64, t_end: f64) -> SolverConfig {
    SolverConfig {
        scheme,
        dt,
        adaptive_dt: false,
        t_end,
        ..SolverConfig::default()
    }
}

fn primal_run(grid: &Grid2D, scheme: Scheme, dt: f64, t_end: f64) -> Result<(Field, Field)> {
    let of = OuterFlow::from_family(&TraceFamily::Constant { u: 1.0, h: 1.0 });
    let m = ManufacturedPair::default();
    let mut solver = PrimalSolver::new(
        m.state(grid, 0.0),
        of,
        Cutoff::default(),
        grid.clone(),
        mms_config(scheme, dt, t_end),
    )?
    .with_forcing(Arc::new(m));
    solver.advance_to(t_end)?;
    Ok((solver.state().u.clone(), solver.state().h.clone()))
}

fn crocco_run(grid: &Grid2D, scheme: Scheme, dt: f64, t_end: f64) -> Result<(Field, Field)> {
    let of = OuterFlow::from_family(&TraceFamily::Constant { u: 1.0, h: 1.0 });
    let m = CroccoManufactured::default();
    let mut solver = CroccoSolver::new(m.state(grid, 0.0), of, mms_config(scheme, dt, t_end))?
        .with_forcing(Arc::new(m));
    solver.advance_to(t_end)?;
    Ok((solver.state().u1.clone(), solver.state().h1.clone()))
}

fn run(kind: SolverKind, grid: &Grid2D, scheme: Scheme, dt: f64, t_end: f64) -> Result<(Field, Field)> {
    match kind {
        SolverKind::Primal => primal_run(grid, scheme, dt, t_end),
        SolverKind::Crocco => crocco_run(grid, scheme, dt, t_end),
    }
}

fn exact(kind: SolverKind, grid: &Grid2D, t: f64) -> (Field, Field) {
    match kind {
        SolverKind::Primal => {
            let s = ManufacturedPair::default().state(grid, t);
            (s.u, s.h)
        }
        SolverKind::Crocco => {
            let s = CroccoManufactured::default().state(grid, t);
            (s.u1, s.h1)
        }
    }
}

fn study_grid(kind: SolverKind, nx: usize, ny: usize) -> Result<Grid2D> {
    let y_max = match kind {
        SolverKind::Primal => PRIMAL_Y_MAX,
        SolverKind::Crocco => CROCCO_ETA_MAX,
    };
    Grid2D::new(nx, ny, y_max)
}

fn pair_distance(a: &(Field, Field), b: &(Field, Field), grid: &Grid2D) -> f64 {
    ops::norm_l2(&(&a.0 - &b.0), grid).hypot(ops::norm_l2(&(&a.1 - &b.1), grid))
}

/// Error against the manufactured solution at `t_end` on grids
/// `nx = levels[k]`, `ny = y_per_x * nx + 1`, with a step small enough that
/// the temporal error is negligible.
pub fn spatial_study(
    kind: SolverKind,
    scheme: Scheme,
    levels: &[usize],
    y_per_x: usize,
    dt: f64,
    t_end: f64,
) -> Result<ConvergenceTable> {
    let mut h = Vec::new();
    let mut errors = Vec::new();
    for &nx in levels {
        let grid = study_grid(kind, nx, y_per_x * nx + 1)?;
        let num = run(kind, &grid, scheme, dt, t_end)?;
        errors.push(pair_distance(&num, &exact(kind, &grid, t_end), &grid));
        h.push(grid.dx);
    }
    Ok(ConvergenceTable::new(kind, Axis::Space, scheme, h, errors))
}

/// Temporal error on a fixed grid, measured against a run with step
/// `min(dts) / reference_refinement` on the same grid so that the spatial
/// error cancels.
pub fn temporal_study(
    kind: SolverKind,
    scheme: Scheme,
    nx: usize,
    ny: usize,
    dts: &[f64],
    reference_refinement: usize,
    t_end: f64,
) -> Result<ConvergenceTable> {
    let grid = study_grid(kind, nx, ny)?;
    let finest = dts.iter().copied().fold(f64::INFINITY, f64::min);
    let reference = run(kind, &grid, scheme, finest / reference_refinement as f64, t_end)?;
    let mut errors = Vec::new();
    for &dt in dts {
        let num = run(kind, &grid, scheme, dt, t_end)?;
        errors.push(pair_distance(&num, &reference, &grid));
    }
    Ok(ConvergenceTable::new(kind, Axis::Time, scheme, dts.to_vec(), errors))
}

/// The shipped study: spatial `nx = 16, 32, 64` at `dt = 1e-3` to `t = 0.2`
/// with the Crank-Nicolson variant, temporal `dt = 0.04 .. 0.005` on
/// `32 x 193` to `t = 0.4` for both schemes.
pub fn standard_studies(kind: SolverKind, scale: usize) -> Result<Vec<ConvergenceTable>> {
    let s = scale.max(1);
    let levels: Vec<usize> = [16, 32, 64].iter().map(|n| n * s).collect();
    let mut out = vec![spatial_study(kind, Scheme::ImexCn, &levels, 6, 1e-3, 0.2)?];
    for scheme in [Scheme::ImexBe, Scheme::ImexCn] {
        out.push(temporal_study(
            kind,
            scheme,
            32 * s,
            192 * s + 1,
            &[0.04, 0.02, 0.01, 0.005],
            16,
            0.4,
        )?);
    }
    Ok(out)
}
