//! Outer trace data `(U, H, P)`, the matching condition, and the source terms
//! that appear once the cutoff-weighted traces are subtracted.
//!
//! Every trace is a finite sum of `c e^{-rate t} cos(k x)` / `sin(k x)` modes, so
//! all mixed derivatives are available in closed form.

use crate::error::{Error, Result};
use crate::fields::State;
use crate::grid::{Cutoff, Grid2D};
use crate::ops::{self, Field};
use crate::system::{self, Coefficients};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

/// One mode `coef * exp(-rate t) * trig(k x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub coef: f64,
    pub rate: f64,
    pub k: f64,
    pub trig: Trig,
}

impl Mode {
    pub fn constant(c: f64) -> Self {
        Self::cos(c, 0.0, 0.0)
    }

    pub fn cos(coef: f64, rate: f64, k: f64) -> Self {
        Self {
            coef,
            rate,
            k,
            trig: Trig::Cos,
        }
    }

    pub fn sin(coef: f64, rate: f64, k: f64) -> Self {
        Self {
            coef,
            rate,
            k,
            trig: Trig::Sin,
        }
    }

    /// `d_t^i d_x^j` of the mode at `(t, x)`.
    pub fn eval(&self, i: usize, j: usize, t: f64, x: f64) -> f64 {
        let time = (-self.rate).powi(i as i32) * (-self.rate * t).exp();
        let kx = self.k * x;
        // derivatives of cos cycle cos, -sin, -cos, sin; sin shifts the cycle by one
        let shift = match self.trig {
            Trig::Cos => 0,
            Trig::Sin => 3,
        };
        let space = match (j + shift) % 4 {
            0 => kx.cos(),
            1 => -kx.sin(),
            2 => -kx.cos(),
            _ => kx.sin(),
        };
        self.coef * time * self.k.powi(j as i32) * space
    }
}

/// A trace as a sum of modes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series(pub Vec<Mode>);

impl Series {
    pub fn eval(&self, i: usize, j: usize, t: f64, x: f64) -> f64 {
        self.0.iter().map(|m| m.eval(i, j, t, x)).sum()
    }
}

/// Registry of shipped trace families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TraceFamily {
    /// `U = u`, `H = h`, `P = 0`.
    Constant { u: f64, h: f64 },
    /// Steady solution of the matching condition:
    /// `U = u0 (1 + amp cos x)`, `H = ratio U`, `P = (ratio^2 - 1) U^2 / 2`.
    SteadyPair { u0: f64, amp: f64, ratio: f64 },
    /// `U = amp sin(x) e^{-t}`, `H = 0`, `P` chosen so that `P_x = -(U_t + U U_x)`.
    Burgers { amp: f64 },
}

impl Default for TraceFamily {
    fn default() -> Self {
        TraceFamily::Constant { u: 1.0, h: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trace {
    U,
    H,
    P,
}

/// Closed-form outer traces.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterFlow {
    pub u: Series,
    pub h: Series,
    pub p: Series,
}

impl OuterFlow {
    pub fn from_series(u: Series, h: Series, p: Series) -> Self {
        Self { u, h, p }
    }

    pub fn zero() -> Self {
        Self::from_series(Series::default(), Series::default(), Series::default())
    }

    pub fn from_family(f: &TraceFamily) -> Self {
        match *f {
            TraceFamily::Constant { u, h } => Self::from_series(
                Series(vec![Mode::constant(u)]),
                Series(vec![Mode::constant(h)]),
                Series::default(),
            ),
            TraceFamily::SteadyPair { u0, amp, ratio } => {
                let u = Series(vec![Mode::constant(u0), Mode::cos(u0 * amp, 0.0, 1.0)]);
                let h = Series(vec![
                    Mode::constant(ratio * u0),
                    Mode::cos(ratio * u0 * amp, 0.0, 1.0),
                ]);
                // U^2 = u0^2 [(1 + amp^2/2) + 2 amp cos x + (amp^2/2) cos 2x]
                let s = 0.5 * (ratio * ratio - 1.0) * u0 * u0;
                let p = Series(vec![
                    Mode::constant(s * (1.0 + 0.5 * amp * amp)),
                    Mode::cos(s * 2.0 * amp, 0.0, 1.0),
                    Mode::cos(s * 0.5 * amp * amp, 0.0, 2.0),
                ]);
                Self::from_series(u, h, p)
            }
            TraceFamily::Burgers { amp } => {
                let u = Series(vec![Mode::sin(amp, 1.0, 1.0)]);
                // P = -amp e^{-t} cos x - (amp^2/4) e^{-2t} (1 - cos 2x)
                let p = Series(vec![
                    Mode::cos(-amp, 1.0, 1.0),
                    Mode::cos(-0.25 * amp * amp, 2.0, 0.0),
                    Mode::cos(0.25 * amp * amp, 2.0, 2.0),
                ]);
                Self::from_series(u, Series::default(), p)
            }
        }
    }

    fn series(&self, which: Trace) -> &Series {
        match which {
            Trace::U => &self.u,
            Trace::H => &self.h,
            Trace::P => &self.p,
        }
    }

    /// `d_t^i d_x^j` of a trace at `(t, x)`.
    pub fn eval(&self, which: Trace, i: usize, j: usize, t: f64, x: f64) -> f64 {
        self.series(which).eval(i, j, t, x)
    }

    /// `d_t^i d_x^j` of a trace sampled on the grid's `x` nodes.
    pub fn profile(&self, which: Trace, i: usize, j: usize, t: f64, grid: &Grid2D) -> Vec<f64> {
        grid.x_nodes
            .iter()
            .map(|&x| self.eval(which, i, j, t, x))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        [&self.u, &self.h, &self.p]
            .iter()
            .all(|s| s.0.iter().all(|m| m.coef == 0.0))
    }
}

/// Residuals of the matching condition on the `x` nodes:
/// `U_t + U U_x - H H_x + P_x` and `H_t + U H_x - H U_x`.
pub fn matching_residual(of: &OuterFlow, t: f64, grid: &Grid2D) -> (Vec<f64>, Vec<f64>) {
    let mut r1 = Vec::with_capacity(grid.nx);
    let mut r2 = Vec::with_capacity(grid.nx);
    for &x in &grid.x_nodes {
        let e = |w, i, j| of.eval(w, i, j, t, x);
        let (u, ux, ut) = (e(Trace::U, 0, 0), e(Trace::U, 0, 1), e(Trace::U, 1, 0));
        let (h, hx, ht) = (e(Trace::H, 0, 0), e(Trace::H, 0, 1), e(Trace::H, 1, 0));
        let px = e(Trace::P, 0, 1);
        r1.push(ut + u * ux - h * hx + px);
        r2.push(ht + u * hx - h * ux);
    }
    (r1, r2)
}

/// Compatibility correction `-sum_i (t^i / i!) d_x^2 d_t^i (u, h)(0)` that
/// cancels the `eps d_x^2` term at `t = 0`; the solver adds `eps` times it.
#[derive(Debug, Clone)]
pub struct Corrector {
    pub order: usize,
    pub r1: Field,
    pub r2: Field,
    pub r3: Field,
}

/// Source fields of the homogenized system at one time.
#[derive(Debug, Clone)]
pub struct SourceTerms {
    pub t: f64,
    pub r1: Field,
    pub r2: Field,
    pub r3: Field,
    pub eps: f64,
    pub corrector: Option<Corrector>,
}

impl SourceTerms {
    /// `r + eps * r~` for the two evolution sources.
    pub fn regularized(&self) -> (Field, Field) {
        match &self.corrector {
            Some(c) if self.eps != 0.0 => (
                &self.r1 + &(&c.r1 * self.eps),
                &self.r2 + &(&c.r2 * self.eps),
            ),
            _ => (self.r1.clone(), self.r2.clone()),
        }
    }
}

/// `y`-profiles multiplying the trace data in the sources.
pub(crate) struct SourceProfiles {
    pub a1: Vec<f64>,
    pub b1: Vec<f64>,
    pub a2: Vec<f64>,
    pub a3: Vec<f64>,
    pub phi2: Vec<f64>,
    pub phi3: Vec<f64>,
}

impl SourceProfiles {
    pub fn new(c: &Cutoff, grid: &Grid2D) -> Self {
        let [p0, p1, p2, p3] = c.profiles(grid);
        let n = grid.ny;
        let mut s = Self {
            a1: vec![0.0; n],
            b1: vec![0.0; n],
            a2: vec![0.0; n],
            a3: vec![0.0; n],
            phi2: p2.clone(),
            phi3: p3,
        };
        for j in 0..n {
            let sq = p1[j] * p1[j];
            let pp = p0[j] * p2[j];
            s.a1[j] = sq - pp - p1[j];
            s.b1[j] = sq - pp - 1.0;
            s.a2[j] = sq + pp - p1[j];
            s.a3[j] = p0[j] * (p1[j] - 1.0);
        }
        s
    }
}

/// `d_x^b` of the three sources, with trace derivatives taken in closed form.
pub fn source_r_dx(
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    t: f64,
    mu: f64,
    kappa: f64,
    b: usize,
) -> (Field, Field, Field) {
    let sp = SourceProfiles::new(c, grid);
    let ut = of.profile(Trace::U, 1, b, t, grid);
    let px = of.profile(Trace::P, 0, b + 1, t, grid);
    let u = of.profile(Trace::U, 0, b, t, grid);
    let ht = of.profile(Trace::H, 1, b, t, grid);
    let h = of.profile(Trace::H, 0, b, t, grid);
    let (nx, ny) = grid.shape();
    let mut r1 = Field::zeros((nx, ny));
    let mut r2 = Field::zeros((nx, ny));
    let mut r3 = Field::zeros((nx, ny));
    for i in 0..nx {
        for j in 0..ny {
            r1[[i, j]] = ut[i] * sp.a1[j] + px[i] * sp.b1[j] + mu * u[i] * sp.phi3[j];
            r2[[i, j]] = ht[i] * sp.a2[j] + kappa * h[i] * sp.phi3[j];
            r3[[i, j]] = ht[i] * sp.a3[j] + kappa * h[i] * sp.phi2[j];
        }
    }
    (r1, r2, r3)
}

/// Sources `r1, r2, r3` on the grid at time `t`.
pub fn source_r(
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    t: f64,
    mu: f64,
    kappa: f64,
) -> SourceTerms {
    let (r1, r2, r3) = source_r_dx(of, c, grid, t, mu, kappa, 0);
    SourceTerms {
        t,
        r1,
        r2,
        r3,
        eps: 0.0,
        corrector: None,
    }
}

/// Builds the compatibility corrector from the initial data.
///
/// Order 0 uses only `d_x^2 (u0, h0)`; order 1 adds `t d_x^2 d_t (u, h)(0)` with
/// the time derivative taken from the right-hand side of the evolution system.
pub fn epsilon_corrector(
    state0: &State,
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    coeffs: Coefficients,
    order: usize,
    t: f64,
) -> Result<Corrector> {
    if order > 1 {
        return Err(Error::UnsupportedCorrectorOrder(order));
    }
    let mut su = ops::dxx(&state0.u, grid);
    let mut sh = ops::dxx(&state0.h, grid);
    if order == 1 {
        let (ut, ht) = system::tendency(state0, of, c, grid, coeffs, state0.t);
        su = su + &(ops::dxx(&ut, grid) * t);
        sh = sh + &(ops::dxx(&ht, grid) * t);
    }
    let r3 = -ops::cumtrapz_y(&sh, grid);
    Ok(Corrector {
        order,
        r1: -su,
        r2: -sh,
        r3,
    })
}

/// `sup_t sum_{i+j <= order} ||d_t^i d_x^j (U, H, P)(t)||_{L^2(T)}` over the
/// supplied time samples (sum of the three norms per index).
pub fn outer_norm_m0(of: &OuterFlow, order: usize, t_samples: &[f64], grid: &Grid2D) -> f64 {
    t_samples
        .iter()
        .map(|&t| {
            let mut s = 0.0;
            for i in 0..=order {
                for j in 0..=order - i {
                    for w in [Trace::U, Trace::H, Trace::P] {
                        s += ops::norm_x(&of.profile(w, i, j, t, grid), grid.dx);
                    }
                }
            }
            s
        })
        .fold(0.0, f64::max)
}

/// `sum_{i+j <= order} ||d_t^i d_x^j (U, H, P)(t)||^2_{L^2(T)}` at one time.
pub fn outer_energy(of: &OuterFlow, order: usize, t: f64, grid: &Grid2D) -> f64 {
    let mut s = 0.0;
    for i in 0..=order {
        for j in 0..=order - i {
            for w in [Trace::U, Trace::H, Trace::P] {
                let n = ops::norm_x(&of.profile(w, i, j, t, grid), grid.dx);
                s += n * n;
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_derivatives_cycle() {
        let m = Mode::sin(2.0, 0.5, 3.0);
        let (t, x) = (0.3, 0.7);
        let e = (-0.5f64 * t).exp();
        assert!((m.eval(0, 0, t, x) - 2.0 * e * (3.0 * x).sin()).abs() < 1e-14);
        assert!((m.eval(0, 1, t, x) - 6.0 * e * (3.0 * x).cos()).abs() < 1e-14);
        assert!((m.eval(1, 2, t, x) - (-0.5) * (-18.0) * e * (3.0 * x).sin()).abs() < 1e-13);
        let c = Mode::cos(1.0, 0.0, 2.0);
        assert!((c.eval(0, 3, 0.0, x) - 8.0 * (2.0 * x).sin()).abs() < 1e-13);
    }

    #[test]
    fn constant_modes_have_no_x_derivative() {
        let m = Mode::constant(4.0);
        assert_eq!(m.eval(0, 0, 1.0, 2.0), 4.0);
        assert_eq!(m.eval(0, 1, 1.0, 2.0), 0.0);
        assert_eq!(m.eval(1, 0, 1.0, 2.0), 0.0);
    }
}
