//! The Crocco formulation: with `eta = psi(t, x, y)` the stream function of the
//! magnetic field, the unknowns `(u1, h1)(tau, xi, eta)` satisfy
//!
//! ```text
//! u1_tau + u1 u1_xi - h1 h1_xi + (kappa - mu) h1 h1_eta u1_eta = mu h1^2 u1_eta_eta - P_x
//! h1_tau - h1 u1_xi + u1 h1_xi = kappa h1^2 h1_eta_eta
//! ```
//!
//! with `u1 = 0`, `h1_eta = 0` at the wall and the outer values at `eta_max`.
//! The degenerate diffusion `h1^2 d_eta^2` is implicit with frozen coefficients.

use super::primal::PrimalSolver;
use super::tridiag::{apply_variable_diffusion, ColumnOperator, WallCondition};
use super::{Scheme, SolverConfig};
use crate::error::{Error, Result};
use crate::fields::{field_min, to_physical, PhysicalState, State};
use crate::grid::{Cutoff, Grid2D};
use crate::ops::{self, Field, Pchip};
use crate::outer::{OuterFlow, Trace};
use ndarray::Zip;
use std::sync::Arc;

/// `(u1, h1)` on a `(xi, eta)` grid. The `y` axis of `grid` is `eta`.
#[derive(Debug, Clone)]
pub struct CroccoState {
    pub grid: Grid2D,
    pub u1: Field,
    pub h1: Field,
    pub tau: f64,
}

/// Uniform `(xi, eta)` grid on `[0, eta_max]`.
pub fn eta_grid(nx: usize, n_eta: usize, eta_max: f64) -> Result<Grid2D> {
    Grid2D::new(nx, n_eta, eta_max)
}

/// `psi(y_max)` per column for the physical magnetic field `h1`.
pub fn column_flux(h1: &Field, grid: &Grid2D) -> Vec<f64> {
    ops::column_integrals(h1, grid)
}

/// Maps physical fields to Crocco variables column by column: `psi` by the
/// cumulative trapezoid of `h1`, `y(eta)` by monotone cubic interpolation,
/// then `u1`, `h1` by cubic Hermite interpolation at `y(eta)`. Nodes above a
/// column's range take its top values.
pub fn to_crocco(ps: &PhysicalState, grid: &Grid2D, eta: &Grid2D) -> Result<CroccoState> {
    if eta.nx != grid.nx {
        return Err(Error::InvalidGrid("xi nodes must match the x nodes".into()));
    }
    let mut u1 = Field::zeros(eta.shape());
    let mut h1 = Field::zeros(eta.shape());
    for i in 0..grid.nx {
        let hcol = ps.h1.row(i).to_vec();
        if hcol.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Monotonicity { column: i });
        }
        let mut psi = vec![0.0; grid.ny];
        ops::cumtrapz_1d(&hcol, grid.dy, &mut psi);
        let y_of_eta = Pchip::new(psi, grid.y_nodes.clone());
        let ui = Pchip::with_centered_slopes(grid.y_nodes.clone(), ps.u1.row(i).to_vec());
        let hi = Pchip::with_centered_slopes(grid.y_nodes.clone(), hcol);
        for (j, &e) in eta.y_nodes.iter().enumerate() {
            let y = y_of_eta.eval(e);
            u1[[i, j]] = ui.eval(y);
            h1[[i, j]] = hi.eval(y);
        }
    }
    Ok(CroccoState {
        grid: eta.clone(),
        u1,
        h1,
        tau: ps.t,
    })
}

/// Values and derivatives of an analytic Crocco pair at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CroccoPoint {
    pub u: f64,
    pub u_t: f64,
    pub u_x: f64,
    pub u_e: f64,
    pub u_ee: f64,
    pub h: f64,
    pub h_t: f64,
    pub h_x: f64,
    pub h_e: f64,
    pub h_ee: f64,
}

pub trait CroccoAnalytic: Send + Sync {
    fn eval(&self, tau: f64, xi: f64, eta: f64) -> CroccoPoint;

    fn state(&self, grid: &Grid2D, tau: f64) -> CroccoState {
        CroccoState {
            grid: grid.clone(),
            u1: ops::sample(grid, |x, e| self.eval(tau, x, e).u),
            h1: ops::sample(grid, |x, e| self.eval(tau, x, e).h),
            tau,
        }
    }
}

/// `u1 = (1 - e^{-eta})(1 + a e^{-tau} sin xi)`,
/// `h1 = 1 + b e^{-tau} cos xi (1 + eta) e^{-eta}`; wall conditions hold exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CroccoManufactured {
    pub a: f64,
    pub b: f64,
}

impl Default for CroccoManufactured {
    fn default() -> Self {
        Self { a: 0.1, b: 0.3 }
    }
}

impl CroccoAnalytic for CroccoManufactured {
    fn eval(&self, tau: f64, xi: f64, eta: f64) -> CroccoPoint {
        let et = (-tau).exp();
        let ee = (-eta).exp();
        let (s, c) = xi.sin_cos();
        let prof = 1.0 - ee;
        let amp = 1.0 + self.a * et * s;
        let q = (1.0 + eta) * ee;
        CroccoPoint {
            u: prof * amp,
            u_t: -prof * self.a * et * s,
            u_x: prof * self.a * et * c,
            u_e: ee * amp,
            u_ee: -ee * amp,
            h: 1.0 + self.b * et * c * q,
            h_t: -self.b * et * c * q,
            h_x: -self.b * et * s * q,
            h_e: -self.b * et * c * eta * ee,
            h_ee: self.b * et * c * (eta - 1.0) * ee,
        }
    }
}

pub struct CroccoSolver {
    state: CroccoState,
    of: OuterFlow,
    cfg: SolverConfig,
    forcing: Option<Arc<dyn CroccoAnalytic>>,
    steps: usize,
}

impl CroccoSolver {
    pub fn new(state: CroccoState, of: OuterFlow, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            state,
            of,
            cfg,
            forcing: None,
            steps: 0,
        })
    }

    pub fn with_forcing(mut self, analytic: Arc<dyn CroccoAnalytic>) -> Self {
        self.forcing = Some(analytic);
        self
    }

    pub fn state(&self) -> &CroccoState {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn explicit(&self, u1: &Field, h1: &Field, tau: f64) -> (Field, Field) {
        let g = &self.state.grid;
        let ux = ops::dx(u1, g);
        let hx = ops::dx(h1, g);
        let ue = ops::dy(u1, g);
        let he = ops::dy(h1, g);
        let (mu, kappa) = (self.cfg.mu, self.cfg.kappa);
        let px = self.of.profile(Trace::P, 0, 1, tau, g);
        let mut nu = Field::zeros(g.shape());
        let mut nh = Field::zeros(g.shape());
        for i in 0..g.nx {
            let xi = g.x_nodes[i];
            for j in 0..g.ny {
                let (u, h) = (u1[[i, j]], h1[[i, j]]);
                let mut fu = -u * ux[[i, j]] + h * hx[[i, j]] - (kappa - mu) * h * he[[i, j]] * ue[[i, j]] - px[i];
                let mut fh = h * ux[[i, j]] - u * hx[[i, j]];
                if let Some(a) = &self.forcing {
                    let p = a.eval(tau, xi, g.y_nodes[j]);
                    fu += p.u_t + p.u * p.u_x - p.h * p.h_x + (kappa - mu) * p.h * p.h_e * p.u_e
                        - mu * p.h * p.h * p.u_ee
                        + px[i];
                    fh += p.h_t - p.h * p.u_x + p.u * p.h_x - kappa * p.h * p.h * p.h_ee;
                }
                nu[[i, j]] = fu;
                nh[[i, j]] = fh;
            }
        }
        (nu, nh)
    }

    fn top_values(&self, tau: f64) -> (Vec<f64>, Vec<f64>) {
        let g = &self.state.grid;
        match &self.forcing {
            Some(a) => g.x_nodes.iter().map(|&x| {
                let p = a.eval(tau, x, g.y_max);
                (p.u, p.h)
            }).unzip(),
            None => (
                self.of.profile(Trace::U, 0, 0, tau, g),
                self.of.profile(Trace::H, 0, 0, tau, g),
            ),
        }
    }

    fn set_boundary(&self, ru: &mut Field, rh: &mut Field, tau: f64) {
        let (tu, th) = self.top_values(tau);
        let top = self.state.grid.ny - 1;
        for i in 0..self.state.grid.nx {
            ru[[i, 0]] = 0.0;
            ru[[i, top]] = tu[i];
            rh[[i, top]] = th[i];
        }
    }

    /// `nu h1^2 d_eta^2 f` with frozen `h1`.
    fn apply(&self, f: &Field, h1: &Field, nu: f64, wall: WallCondition) -> Field {
        let deta = self.state.grid.dy;
        let mut out = Field::zeros(f.dim());
        Zip::from(out.rows_mut()).and(f.rows()).and(h1.rows()).par_for_each(|mut o, fr, hr| {
            apply_variable_diffusion(
                fr.as_slice().expect("standard layout"),
                deta,
                |j| nu * hr[j] * hr[j],
                wall,
                o.as_slice_mut().expect("standard layout"),
            );
        });
        out
    }

    fn solve(&self, rhs: &mut Field, h1: &Field, nu: f64, tau: f64, wall: WallCondition) {
        let deta = self.state.grid.dy;
        Zip::from(rhs.rows_mut()).and(h1.rows()).par_for_each(|mut r, hr| {
            let coef: Vec<f64> = hr.iter().map(|h| nu * h * h).collect();
            let op = ColumnOperator::with_coefficients(&coef, deta, tau, 0.0, wall);
            let mut scratch = vec![0.0; coef.len()];
            op.solve(r.as_slice_mut().expect("standard layout"), &mut scratch);
        });
    }

    fn implicit_solve(&self, ru: &mut Field, rh: &mut Field, h1: &Field, tau: f64) {
        self.solve(ru, h1, self.cfg.mu, tau, WallCondition::Dirichlet);
        self.solve(rh, h1, self.cfg.kappa, tau, WallCondition::Neumann);
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        let s = &self.state;
        let (t, t1) = (s.tau, s.tau + dt);
        let (nu0, nh0) = self.explicit(&s.u1, &s.h1, t);
        let (u1, h1) = match self.cfg.scheme {
            Scheme::ImexBe => {
                let mut ru = &s.u1 + &(&nu0 * dt);
                let mut rh = &s.h1 + &(&nh0 * dt);
                self.set_boundary(&mut ru, &mut rh, t1);
                self.implicit_solve(&mut ru, &mut rh, &s.h1, dt);
                (ru, rh)
            }
            Scheme::ImexCn => {
                let lu = self.apply(&s.u1, &s.h1, self.cfg.mu, WallCondition::Dirichlet);
                let lh = self.apply(&s.h1, &s.h1, self.cfg.kappa, WallCondition::Neumann);
                let base_u = &s.u1 + &(lu * (0.5 * dt));
                let base_h = &s.h1 + &(lh * (0.5 * dt));
                let mut pu = &base_u + &(&nu0 * dt);
                let mut ph = &base_h + &(&nh0 * dt);
                self.set_boundary(&mut pu, &mut ph, t1);
                self.implicit_solve(&mut pu, &mut ph, &s.h1, 0.5 * dt);
                let (nu1, nh1) = self.explicit(&pu, &ph, t1);
                let mut ru = base_u + &((nu0 + &nu1) * (0.5 * dt));
                let mut rh = base_h + &((nh0 + &nh1) * (0.5 * dt));
                self.set_boundary(&mut ru, &mut rh, t1);
                self.implicit_solve(&mut ru, &mut rh, &ph, 0.5 * dt);
                (ru, rh)
            }
        };
        if u1.iter().chain(h1.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: t1 });
        }
        if self.cfg.enforce_positivity {
            let (min, x, y) = field_min(&h1, &self.state.grid);
            let required = 0.5 * self.cfg.thresholds.delta0;
            if min < required {
                return Err(Error::Positivity { min, x, y, required });
            }
        }
        self.state.u1 = u1;
        self.state.h1 = h1;
        self.state.tau = t1;
        self.steps += 1;
        Ok(())
    }

    /// Advective step limit in `xi` and in `eta` (the `(kappa - mu) h1 h1_eta`
    /// drift), capped by `cfg.dt`.
    pub fn cfl_dt(&self) -> Result<f64> {
        let s = &self.state;
        let g = &s.grid;
        let he = ops::dy(&s.h1, g);
        let drift = (self.cfg.kappa - self.cfg.mu).abs();
        let mut sx = 0.0f64;
        let mut se = 0.0f64;
        for ((u, h), e) in s.u1.iter().zip(s.h1.iter()).zip(he.iter()) {
            sx = sx.max(u.abs() + h.abs());
            se = se.max(drift * (h * e).abs());
        }
        if sx.is_nan() || se.is_nan() {
            return Err(Error::CflCollapse { dt: f64::NAN });
        }
        let lim_x = if sx > 0.0 { g.dx / sx } else { f64::INFINITY };
        let lim_e = if se > 0.0 { g.dy / se } else { f64::INFINITY };
        let dt = (self.cfg.cfl * lim_x.min(lim_e)).min(self.cfg.dt);
        if !(dt > 0.0) || dt < 1e-12 * self.cfg.dt {
            return Err(Error::CflCollapse { dt });
        }
        Ok(dt)
    }

    pub fn advance_to(&mut self, t_target: f64) -> Result<usize> {
        let mut taken = 0;
        while self.state.tau < t_target - 1e-12 * t_target.abs().max(1.0) {
            let remaining = t_target - self.state.tau;
            let dt = if self.cfg.adaptive_dt { self.cfl_dt()? } else { self.cfg.dt };
            let n = (remaining / dt - 1e-9).ceil().max(1.0);
            self.step(remaining / n)?;
            taken += 1;
        }
        Ok(taken)
    }
}

/// Distances between the two formulations over time.
#[derive(Debug, Clone, PartialEq)]
pub struct CroccoComparison {
    pub eta_max: f64,
    pub times: Vec<f64>,
    /// `||u1_primal - u1_crocco|| / ||u1_crocco||` on the `(xi, eta)` grid.
    pub distance_u: Vec<f64>,
    pub distance_h: Vec<f64>,
    /// Combined relative distance of `(u1, h1)`.
    pub distance: Vec<f64>,
    /// `min_x psi(t, x, y_max) - eta_max` from the primal run.
    pub flux_margin: Vec<f64>,
}

fn rel(a: &Field, b: &Field, g: &Grid2D) -> (f64, f64) {
    (ops::norm_l2(&(a - b), g), ops::norm_l2(b, g))
}

/// Runs both formulations from the same initial data and compares them at
/// `times` (which must be increasing and not before the initial time).
pub fn crocco_compare(
    s0: &State,
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    cfg: &SolverConfig,
    n_eta: usize,
    times: &[f64],
) -> Result<CroccoComparison> {
    let ps0 = to_physical(s0, of, c, grid);
    let eta_max = column_flux(&ps0.h1, grid).into_iter().fold(f64::INFINITY, f64::min);
    let eg = eta_grid(grid.nx, n_eta, eta_max)?;
    let cs0 = to_crocco(&ps0, grid, &eg)?;
    let mut primal = PrimalSolver::new(s0.clone(), of.clone(), *c, grid.clone(), *cfg)?;
    let mut crocco = CroccoSolver::new(cs0, of.clone(), *cfg)?;
    let mut out = CroccoComparison {
        eta_max,
        times: Vec::new(),
        distance_u: Vec::new(),
        distance_h: Vec::new(),
        distance: Vec::new(),
        flux_margin: Vec::new(),
    };
    for &t in times {
        let (rp, rc) = rayon::join(|| primal.advance_to(t), || crocco.advance_to(t));
        rp?;
        rc?;
        let ps = to_physical(primal.state(), of, c, grid);
        let mapped = to_crocco(&ps, grid, &eg)?;
        let cs = crocco.state();
        let (du, nu) = rel(&mapped.u1, &cs.u1, &eg);
        let (dh, nh) = rel(&mapped.h1, &cs.h1, &eg);
        out.times.push(t);
        out.distance_u.push(if nu > 0.0 { du / nu } else { du });
        out.distance_h.push(if nh > 0.0 { dh / nh } else { dh });
        let den = nu.hypot(nh);
        out.distance.push(if den > 0.0 { du.hypot(dh) / den } else { du.hypot(dh) });
        let flux = column_flux(&ps.h1, grid).into_iter().fold(f64::INFINITY, f64::min);
        out.flux_margin.push(flux - eta_max);
    }
    Ok(out)
}
