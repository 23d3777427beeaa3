//! IMEX integration of the homogenized system.
//!
//! Diffusion `mu d_y^2`, `kappa d_y^2` and the optional `eps d_x^2` are
//! implicit; transport, tension, trace coupling and sources are explicit.
//! With `eps > 0` the implicit operator couples `x`, so it is diagonalized by
//! an FFT in `x` and each Fourier mode gets its own tridiagonal solve in `y`.

use super::tridiag::{apply_diffusion, ColumnOperator, WallCondition};
use super::{cfl_dt, Scheme, SolverConfig, Termination};
use crate::diagnostics::{monitor, MonitorConfig, MonitorSample};
use crate::error::{Error, Result};
use crate::fields::{field_min, magnetic_total, recover_vg, State};
use crate::grid::{Cutoff, Grid2D};
use crate::mms::AnalyticState;
use crate::ops::{self, Field};
use crate::outer::{epsilon_corrector, source_r, OuterFlow};
use crate::system::{transport, TraceProfiles};
use ndarray::Zip;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Implicit part of the step for one unknown.
struct Implicit {
    nx: usize,
    ny: usize,
    dy: f64,
    eps: f64,
    /// Eigenvalues of `-d_xx` (three-point stencil) per Fourier mode.
    lambdas: Vec<f64>,
    fft: Option<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
}

impl Implicit {
    fn new(grid: &Grid2D, eps: f64) -> Self {
        let nx = grid.nx;
        let lambdas = (0..nx)
            .map(|k| (2.0 - 2.0 * (2.0 * PI * k as f64 / nx as f64).cos()) / (grid.dx * grid.dx))
            .collect();
        let fft = (eps > 0.0).then(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(nx), planner.plan_fft_inverse(nx))
        });
        Self {
            nx,
            ny: grid.ny,
            dy: grid.dy,
            eps,
            lambdas,
            fft,
        }
    }

    fn dirichlet_row(&self, j: usize, wall: WallCondition) -> bool {
        j == self.ny - 1 || (j == 0 && wall == WallCondition::Dirichlet)
    }

    /// `nu d_y^2 f + eps d_x^2 f` on the rows that are not prescribed.
    fn apply(&self, f: &Field, grid: &Grid2D, nu: f64, wall: WallCondition) -> Field {
        let mut out = Field::zeros((self.nx, self.ny));
        Zip::from(out.rows_mut()).and(f.rows()).par_for_each(|mut o, fr| {
            let o = o.as_slice_mut().expect("standard layout");
            apply_diffusion(fr.as_slice().expect("standard layout"), self.dy, nu, wall, o);
        });
        if self.eps > 0.0 {
            let fxx = ops::dxx(f, grid);
            for j in 0..self.ny {
                if !self.dirichlet_row(j, wall) {
                    let mut col = out.column_mut(j);
                    col.scaled_add(self.eps, &fxx.column(j));
                }
            }
        }
        out
    }

    /// Solves `(I - tau (nu d_y^2 + eps d_x^2)) f = rhs` in place; prescribed
    /// rows of `rhs` carry the boundary values.
    fn solve(&self, rhs: &mut Field, nu: f64, tau: f64, wall: WallCondition) {
        match &self.fft {
            None => {
                let op = ColumnOperator::new(self.ny, self.dy, nu, tau, 0.0, wall);
                Zip::from(rhs.rows_mut()).par_for_each(|mut r| {
                    let mut scratch = vec![0.0; self.ny];
                    op.solve(r.as_slice_mut().expect("standard layout"), &mut scratch);
                });
            }
            Some((fwd, inv)) => {
                let (nx, ny) = (self.nx, self.ny);
                // spectrum[k][j]
                let mut spectrum = vec![vec![Complex::new(0.0, 0.0); ny]; nx];
                let mut buf = vec![Complex::new(0.0, 0.0); nx];
                for j in 0..ny {
                    for i in 0..nx {
                        buf[i] = Complex::new(rhs[[i, j]], 0.0);
                    }
                    fwd.process(&mut buf);
                    for k in 0..nx {
                        spectrum[k][j] = buf[k];
                    }
                }
                spectrum.par_iter_mut().enumerate().for_each(|(k, col)| {
                    let op = ColumnOperator::new(ny, self.dy, nu, tau, self.eps * self.lambdas[k], wall);
                    let mut re: Vec<f64> = col.iter().map(|c| c.re).collect();
                    let mut im: Vec<f64> = col.iter().map(|c| c.im).collect();
                    let mut scratch = vec![0.0; ny];
                    op.solve(&mut re, &mut scratch);
                    op.solve(&mut im, &mut scratch);
                    for j in 0..ny {
                        col[j] = Complex::new(re[j], im[j]);
                    }
                });
                let norm = 1.0 / nx as f64;
                for j in 0..ny {
                    for k in 0..nx {
                        buf[k] = spectrum[k][j];
                    }
                    inv.process(&mut buf);
                    for i in 0..nx {
                        rhs[[i, j]] = buf[i].re * norm;
                    }
                }
            }
        }
    }
}

/// Corrector `r~(t) = base + t * slope`, multiplied by `eps` in the sources.
struct CorrectorFields {
    base: (Field, Field),
    slope: Option<(Field, Field)>,
}

pub struct PrimalSolver {
    grid: Grid2D,
    of: OuterFlow,
    c: Cutoff,
    cfg: SolverConfig,
    phi: [Vec<f64>; 4],
    forcing: Option<Arc<dyn AnalyticState>>,
    corrector: Option<CorrectorFields>,
    implicit: Implicit,
    state: State,
    t0: f64,
    steps: usize,
}

impl PrimalSolver {
    pub fn new(s0: State, of: OuterFlow, c: Cutoff, grid: Grid2D, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        grid.check_cutoff(&c)?;
        if s0.u.dim() != grid.shape() || s0.h.dim() != grid.shape() {
            return Err(Error::InvalidParameter("state shape does not match the grid".into()));
        }
        let corrector = if cfg.eps > 0.0 {
            let coeffs = cfg.coefficients();
            let c0 = epsilon_corrector(&s0, &of, &c, &grid, coeffs, cfg.corrector_order, s0.t)?;
            let slope = if cfg.corrector_order == 1 {
                let c1 = epsilon_corrector(&s0, &of, &c, &grid, coeffs, 1, s0.t + 1.0)?;
                Some((&c1.r1 - &c0.r1, &c1.r2 - &c0.r2))
            } else {
                None
            };
            Some(CorrectorFields {
                base: (c0.r1, c0.r2),
                slope,
            })
        } else {
            None
        };
        Ok(Self {
            phi: c.profiles(&grid),
            implicit: Implicit::new(&grid, cfg.eps),
            grid,
            of,
            c,
            cfg,
            forcing: None,
            corrector,
            t0: s0.t,
            state: s0,
            steps: 0,
        })
    }

    /// Adds the forcing that makes `analytic` an exact solution and takes the
    /// top boundary values from it.
    pub fn with_forcing(mut self, analytic: Arc<dyn AnalyticState>) -> Self {
        self.forcing = Some(analytic);
        self
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Explicit right-hand side: transport, coupling, sources, corrector and forcing.
    fn explicit(&self, s: &State, t: f64) -> (Field, Field) {
        let d = recover_vg(s, &self.grid);
        let tp = TraceProfiles::new(&self.of, t, &self.grid);
        let (mut nu, mut nh) = transport(s, &d, &tp, &self.phi, &self.grid);
        let src = source_r(&self.of, &self.c, &self.grid, t, self.cfg.mu, self.cfg.kappa);
        nu += &src.r1;
        nh += &src.r2;
        if let Some(cf) = &self.corrector {
            let elapsed = t - self.t0;
            nu.scaled_add(self.cfg.eps, &cf.base.0);
            nh.scaled_add(self.cfg.eps, &cf.base.1);
            if let Some((su, sh)) = &cf.slope {
                nu.scaled_add(self.cfg.eps * elapsed, su);
                nh.scaled_add(self.cfg.eps * elapsed, sh);
            }
        }
        if let Some(a) = &self.forcing {
            let (fu, fh) =
                crate::mms::manufactured_forcing(a.as_ref(), &self.of, &self.c, &self.grid, self.cfg.coefficients(), t);
            nu += &fu;
            nh += &fh;
        }
        (nu, nh)
    }

    /// Top Dirichlet values `(u, h)(x, y_max)` at time `t`.
    fn top_values(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        match &self.forcing {
            Some(a) => self
                .grid
                .x_nodes
                .iter()
                .map(|&x| {
                    let p = a.eval(t, x, self.grid.y_max);
                    (p.u, p.h)
                })
                .unzip(),
            None => (vec![0.0; self.grid.nx], vec![0.0; self.grid.nx]),
        }
    }

    fn set_boundary(&self, ru: &mut Field, rh: &mut Field, t: f64) {
        let (tu, th) = self.top_values(t);
        let top = self.grid.ny - 1;
        for i in 0..self.grid.nx {
            ru[[i, 0]] = 0.0;
            ru[[i, top]] = tu[i];
            rh[[i, top]] = th[i];
        }
    }

    fn implicit_solve(&self, ru: &mut Field, rh: &mut Field, tau: f64) {
        self.implicit.solve(ru, self.cfg.mu, tau, WallCondition::Dirichlet);
        self.implicit.solve(rh, self.cfg.kappa, tau, WallCondition::Neumann);
    }

    /// One step of size `dt`; the state is left unchanged on error.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let s = &self.state;
        let t = s.t;
        let t1 = t + dt;
        let (nu0, nh0) = self.explicit(s, t);
        let (u1, h1) = match self.cfg.scheme {
            Scheme::ImexBe => {
                let mut ru = &s.u + &(&nu0 * dt);
                let mut rh = &s.h + &(&nh0 * dt);
                self.set_boundary(&mut ru, &mut rh, t1);
                self.implicit_solve(&mut ru, &mut rh, dt);
                (ru, rh)
            }
            Scheme::ImexCn => {
                let lu = self.implicit.apply(&s.u, &self.grid, self.cfg.mu, WallCondition::Dirichlet);
                let lh = self.implicit.apply(&s.h, &self.grid, self.cfg.kappa, WallCondition::Neumann);
                let base_u = &s.u + &(lu * (0.5 * dt));
                let base_h = &s.h + &(lh * (0.5 * dt));
                let mut pu = &base_u + &(&nu0 * dt);
                let mut ph = &base_h + &(&nh0 * dt);
                self.set_boundary(&mut pu, &mut ph, t1);
                self.implicit_solve(&mut pu, &mut ph, 0.5 * dt);
                let pred = State { u: pu, h: ph, t: t1 };
                let (nu1, nh1) = self.explicit(&pred, t1);
                let mut ru = base_u + &((nu0 + &nu1) * (0.5 * dt));
                let mut rh = base_h + &((nh0 + &nh1) * (0.5 * dt));
                self.set_boundary(&mut ru, &mut rh, t1);
                self.implicit_solve(&mut ru, &mut rh, 0.5 * dt);
                (ru, rh)
            }
        };
        let next = State { u: u1, h: h1, t: t1 };
        if !next.is_finite() {
            return Err(Error::NonFinite { t: t1 });
        }
        if self.cfg.enforce_positivity {
            let a = magnetic_total(&next, &self.of, &self.c, &self.grid);
            let (min, x, y) = field_min(&a, &self.grid);
            let required = 0.5 * self.cfg.thresholds.delta0;
            if min < required {
                return Err(Error::Positivity { min, x, y, required });
            }
        }
        self.state = next;
        self.steps += 1;
        Ok(())
    }

    /// Step size for the next step towards `t_target`.
    fn next_dt(&self, t_target: f64) -> Result<f64> {
        let remaining = t_target - self.state.t;
        let dt = if self.cfg.adaptive_dt {
            cfl_dt(&self.state, &self.of, &self.c, &self.grid, &self.cfg)?
        } else {
            self.cfg.dt
        };
        // Land exactly on the target instead of leaving a sliver.
        let n = (remaining / dt - 1e-9).ceil().max(1.0);
        Ok(remaining / n)
    }

    /// Steps until `t_target`; returns the number of steps taken.
    pub fn advance_to(&mut self, t_target: f64) -> Result<usize> {
        let mut taken = 0;
        while self.state.t < t_target - 1e-12 * t_target.abs().max(1.0) {
            let dt = self.next_dt(t_target)?;
            self.step(dt)?;
            taken += 1;
        }
        Ok(taken)
    }

    pub fn outer(&self) -> &OuterFlow {
        &self.of
    }

    pub fn cutoff(&self) -> &Cutoff {
        &self.c
    }
}

/// Sampling and snapshot cadence of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub monitor: MonitorConfig,
    /// Monitor every this many steps (the first and last states are always sampled).
    pub monitor_every: usize,
    /// Keep a snapshot every this many steps; `None` keeps only the endpoints.
    pub snapshot_every: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            monitor: MonitorConfig::default(),
            monitor_every: 1,
            snapshot_every: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub samples: Vec<MonitorSample>,
    pub snapshots: Vec<State>,
    pub termination: Termination,
    pub steps: usize,
    pub final_state: State,
}

impl RunRecord {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Integrates to `cfg.t_end`, monitoring as configured. Runtime failures
/// (positivity, non-finite values, step collapse) end the run and are
/// recorded as its termination cause.
pub fn run_primal(solver: &mut PrimalSolver, opts: &RunOptions) -> Result<RunRecord> {
    let t_end = solver.cfg.t_end;
    let coeffs = solver.cfg.coefficients();
    let th = solver.cfg.thresholds;
    let every = opts.monitor_every.max(1);
    let sample = |s: &State, solver: &PrimalSolver| {
        monitor(s, &solver.of, &solver.c, &th, &solver.grid, &opts.monitor, coeffs)
    };
    let mut samples = vec![sample(&solver.state, solver)];
    let mut snapshots = vec![solver.state.clone()];
    let mut termination = Termination::Completed;
    while solver.state.t < t_end - 1e-12 * t_end.max(1.0) {
        let dt = match solver.next_dt(t_end) {
            Ok(dt) => dt,
            Err(Error::CflCollapse { .. }) => {
                termination = Termination::CflCollapse { t: solver.state.t };
                break;
            }
            Err(e) => return Err(e),
        };
        let before = solver.state.clone();
        match solver.step(dt) {
            Ok(()) => {}
            Err(Error::Positivity { min, .. }) => {
                termination = Termination::PositivityLost {
                    t: before.t + dt,
                    min,
                };
                break;
            }
            Err(Error::NonFinite { t }) => {
                termination = Termination::NonFinite { t };
                break;
            }
            Err(e) => return Err(e),
        }
        let n = solver.steps;
        let last = solver.state.t >= t_end - 1e-12 * t_end.max(1.0);
        if n % every == 0 || last {
            samples.push(sample(&solver.state, solver));
        }
        if opts.snapshot_every.is_some_and(|k| k > 0 && n % k == 0) && !last {
            snapshots.push(solver.state.clone());
        }
    }
    if snapshots.last().map(|s| s.t) != Some(solver.state.t) {
        snapshots.push(solver.state.clone());
    }
    let last_t = samples.last().map(|s| s.t);
    if last_t != Some(solver.state.t) {
        samples.push(sample(&solver.state, solver));
    }
    Ok(RunRecord {
        samples,
        snapshots,
        termination,
        steps: solver.steps,
        final_state: solver.state.clone(),
    })
}

/// `L^2` distance between two states on the same grid, relative to the second.
pub fn relative_distance(a: &State, b: &State, grid: &Grid2D) -> f64 {
    let num = a.distance(b, grid);
    let den = (ops::norm_l2(&b.u, grid).powi(2) + ops::norm_l2(&b.h, grid).powi(2)).sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
