//! Time integration of the homogenized system and of its Crocco form.

pub mod crocco;
pub mod primal;
pub mod tridiag;

use crate::error::{Error, Result};
use crate::fields::{recover_vg, StabilityThresholds, State};
use crate::grid::{Cutoff, Grid2D};
use crate::outer::{OuterFlow, Trace};
use crate::system::Coefficients;
use serde::{Deserialize, Serialize};

pub use crocco::{crocco_compare, to_crocco, CroccoComparison, CroccoSolver, CroccoState};
pub use primal::{run_primal, PrimalSolver, RunOptions, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Backward Euler on the diffusion, forward Euler on the rest.
    #[default]
    ImexBe,
    /// Crank-Nicolson on the diffusion, Heun on the rest.
    ImexCn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mu: f64,
    pub kappa: f64,
    /// Tangential regularization `eps d_x^2`.
    pub eps: f64,
    /// Upper bound on the step; the exact step when `adaptive_dt` is false.
    pub dt: f64,
    pub adaptive_dt: bool,
    pub t_end: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    /// Order of the compatibility corrector for `eps > 0` (0 or 1).
    pub corrector_order: usize,
    pub thresholds: StabilityThresholds,
    /// Stop when `min (h + H phi')` drops below `delta0 / 2`.
    pub enforce_positivity: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: 1.0,
            kappa: 1.0,
            eps: 0.0,
            dt: 1e-2,
            adaptive_dt: true,
            t_end: 1.0,
            cfl: 0.5,
            scheme: Scheme::ImexCn,
            corrector_order: 0,
            thresholds: StabilityThresholds::default(),
            enforce_positivity: true,
        }
    }
}

impl SolverConfig {
    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            mu: self.mu,
            kappa: self.kappa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.mu > 0.0 && self.kappa > 0.0) {
            return bad(format!("mu = {}, kappa = {} must be positive", self.mu, self.kappa));
        }
        if !(self.eps >= 0.0) {
            return bad(format!("eps = {} must be non-negative", self.eps));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return bad(format!("cfl = {} must lie in (0, 0.9]", self.cfl));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be non-negative", self.t_end));
        }
        if self.corrector_order > 1 {
            return Err(Error::UnsupportedCorrectorOrder(self.corrector_order));
        }
        self.thresholds.validate()
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cause", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    PositivityLost { t: f64, min: f64 },
    NonFinite { t: f64 },
    CflCollapse { t: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::PositivityLost { .. } => "positivity-lost",
            Termination::NonFinite { .. } => "non-finite",
            Termination::CflCollapse { .. } => "cfl-collapse",
        }
    }

    pub fn completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

/// Advective time step
/// `cfl * min(dx / max(|u1| + |h1|), dy / max(|u2| + |h2|))`, capped by `cfg.dt`,
/// with `(u1, h1) = (u + U phi', h + H phi')` and `(u2, h2) = (v - U_x phi, g - H_x phi)`.
pub fn cfl_dt(
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    cfg: &SolverConfig,
) -> Result<f64> {
    let d = recover_vg(s, grid);
    let [p0, p1, _, _] = c.profiles(grid);
    let mut sx = 0.0f64;
    let mut sy = 0.0f64;
    for i in 0..grid.nx {
        let x = grid.x_nodes[i];
        let bu = of.eval(Trace::U, 0, 0, s.t, x);
        let bh = of.eval(Trace::H, 0, 0, s.t, x);
        let bux = of.eval(Trace::U, 0, 1, s.t, x);
        let bhx = of.eval(Trace::H, 0, 1, s.t, x);
        for j in 0..grid.ny {
            let u1 = s.u[[i, j]] + bu * p1[j];
            let h1 = s.h[[i, j]] + bh * p1[j];
            let u2 = d.v[[i, j]] - bux * p0[j];
            let h2 = d.g[[i, j]] - bhx * p0[j];
            sx = sx.max(u1.abs() + h1.abs());
            sy = sy.max(u2.abs() + h2.abs());
        }
    }
    if sx.is_nan() || sy.is_nan() {
        return Err(Error::CflCollapse { dt: f64::NAN });
    }
    let lim_x = if sx > 0.0 { grid.dx / sx } else { f64::INFINITY };
    let lim_y = if sy > 0.0 { grid.dy / sy } else { f64::INFINITY };
    let dt = (cfg.cfl * lim_x.min(lim_y)).min(cfg.dt);
    if !(dt > 0.0) || dt < 1e-12 * cfg.dt {
        return Err(Error::CflCollapse { dt });
    }
    Ok(dt)
}
