//! Closed-form states for the method of manufactured solutions.
//!
//! A descriptor returns the fields and every derivative the evolution operator
//! needs, including the exact normal components `v = -int_0^y u_x` and
//! `g = -int_0^y h_x`. The forcing that makes the descriptor an exact solution
//! is computed by [`manufactured_forcing`].

use crate::fields::State;
use crate::grid::{Cutoff, Grid2D};
use crate::ops::{self, Field};
use crate::outer::{source_r, OuterFlow, Trace};
use crate::system::Coefficients;

/// Values and derivatives of an analytic `(u, h)` pair at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnalyticPoint {
    pub u: f64,
    pub u_t: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub u_yy: f64,
    pub v: f64,
    pub h: f64,
    pub h_t: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub h_yy: f64,
    pub g: f64,
}

pub trait AnalyticState: Send + Sync {
    fn eval(&self, t: f64, x: f64, y: f64) -> AnalyticPoint;

    fn state(&self, grid: &Grid2D, t: f64) -> State {
        State {
            u: ops::sample(grid, |x, y| self.eval(t, x, y).u),
            h: ops::sample(grid, |x, y| self.eval(t, x, y).h),
            t,
        }
    }
}

/// `u* = e^{-t} sin(x) (e^{-y} - e^{-2y})`,
/// `h* = c0 (1 + a e^{-t} cos x) (1 + y) e^{-y}`.
///
/// Both satisfy the wall conditions `u = 0`, `d_y h = 0` exactly and the
/// far-field values are imposed as Dirichlet data at `y_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedPair {
    pub c0: f64,
    pub a: f64,
}

impl Default for ManufacturedPair {
    fn default() -> Self {
        Self { c0: 0.5, a: 0.2 }
    }
}

impl AnalyticState for ManufacturedPair {
    fn eval(&self, t: f64, x: f64, y: f64) -> AnalyticPoint {
        let et = (-t).exp();
        let (e1, e2) = ((-y).exp(), (-2.0 * y).exp());
        let yu = e1 - e2;
        let yu1 = -e1 + 2.0 * e2;
        let yu2 = e1 - 4.0 * e2;
        let iyu = (1.0 - e1) - 0.5 * (1.0 - e2);
        let yh = (1.0 + y) * e1;
        let yh1 = -y * e1;
        let yh2 = (y - 1.0) * e1;
        let iyh = 2.0 - (2.0 + y) * e1;
        let (s, c) = x.sin_cos();
        let amp = self.c0 * (1.0 + self.a * et * c);
        AnalyticPoint {
            u: et * s * yu,
            u_t: -et * s * yu,
            u_x: et * c * yu,
            u_y: et * s * yu1,
            u_yy: et * s * yu2,
            v: -et * c * iyu,
            h: amp * yh,
            h_t: -self.c0 * self.a * et * c * yh,
            h_x: -self.c0 * self.a * et * s * yh,
            h_y: amp * yh1,
            h_yy: amp * yh2,
            g: self.c0 * self.a * et * s * iyh,
        }
    }
}

/// Steady, `x`-independent pair `u* = y e^{-y}`, `h* = c0 (1 + y) e^{-y}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyShear {
    pub c0: f64,
}

impl AnalyticState for SteadyShear {
    fn eval(&self, _t: f64, _x: f64, y: f64) -> AnalyticPoint {
        let e = (-y).exp();
        AnalyticPoint {
            u: y * e,
            u_y: (1.0 - y) * e,
            u_yy: (y - 2.0) * e,
            h: self.c0 * (1.0 + y) * e,
            h_y: -self.c0 * y * e,
            h_yy: self.c0 * (y - 1.0) * e,
            ..Default::default()
        }
    }
}

/// The zero descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZeroState;

impl AnalyticState for ZeroState {
    fn eval(&self, _t: f64, _x: f64, _y: f64) -> AnalyticPoint {
        AnalyticPoint::default()
    }
}

/// Forcing `(f_u, f_h)` = exact evolution operator applied to the descriptor
/// minus the exact sources; adding it to the right-hand side makes the
/// descriptor an exact solution.
pub fn manufactured_forcing(
    analytic: &dyn AnalyticState,
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    coeffs: Coefficients,
    t: f64,
) -> (Field, Field) {
    let src = source_r(of, c, grid, t, coeffs.mu, coeffs.kappa);
    let (nx, ny) = grid.shape();
    let mut fu = Field::zeros((nx, ny));
    let mut fh = Field::zeros((nx, ny));
    for i in 0..nx {
        let x = grid.x_nodes[i];
        let bu = of.eval(Trace::U, 0, 0, t, x);
        let bux = of.eval(Trace::U, 0, 1, t, x);
        let bh = of.eval(Trace::H, 0, 0, t, x);
        let bhx = of.eval(Trace::H, 0, 1, t, x);
        for j in 0..ny {
            let y = grid.y_nodes[j];
            let [p0, p1, p2, _] = c.all(y);
            let a = analytic.eval(t, x, y);
            let tu = (a.u + bu * p1) * a.u_x + (a.v - bux * p0) * a.u_y;
            let th = (a.u + bu * p1) * a.h_x + (a.v - bux * p0) * a.h_y;
            let bh_f = (a.h + bh * p1) * a.h_x + (a.g - bhx * p0) * a.h_y;
            let bu_f = (a.h + bh * p1) * a.u_x + (a.g - bhx * p0) * a.u_y;
            let lhs_u = a.u_t + tu - bh_f - coeffs.mu * a.u_yy + bux * p1 * a.u + bu * p2 * a.v
                - bhx * p1 * a.h
                - bh * p2 * a.g;
            let lhs_h = a.h_t + th - bu_f - coeffs.kappa * a.h_yy + bhx * p1 * a.u + bh * p2 * a.v
                - bux * p1 * a.h
                - bu * p2 * a.g;
            fu[[i, j]] = lhs_u - src.r1[[i, j]];
            fh[[i, j]] = lhs_h - src.r2[[i, j]];
        }
    }
    (fu, fh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manufactured_pair_derivatives_match_differences() {
        let m = ManufacturedPair::default();
        let (t, x, y) = (0.3, 1.1, 0.7);
        let e = 1e-5;
        let p = m.eval(t, x, y);
        let d = |f: &dyn Fn(f64) -> f64| (f(e) - f(-e)) / (2.0 * e);
        assert!((d(&|s| m.eval(t + s, x, y).u) - p.u_t).abs() < 1e-8);
        assert!((d(&|s| m.eval(t, x + s, y).u) - p.u_x).abs() < 1e-8);
        assert!((d(&|s| m.eval(t, x, y + s).u) - p.u_y).abs() < 1e-8);
        assert!((d(&|s| m.eval(t, x, y + s).u_y) - p.u_yy).abs() < 1e-8);
        assert!((d(&|s| m.eval(t, x, y + s).v) + p.u_x).abs() < 1e-8);
        assert!((d(&|s| m.eval(t + s, x, y).h) - p.h_t).abs() < 1e-8);
        assert!((d(&|s| m.eval(t, x + s, y).h) - p.h_x).abs() < 1e-8);
        assert!((d(&|s| m.eval(t, x, y + s).h) - p.h_y).abs() < 1e-8);
        assert!((d(&|s| m.eval(t, x, y + s).h_y) - p.h_yy).abs() < 1e-8);
        assert!((d(&|s| m.eval(t, x, y + s).g) + p.h_x).abs() < 1e-8);
        assert_eq!(m.eval(t, x, 0.0).v, 0.0);
        assert_eq!(m.eval(t, x, 0.0).g, 0.0);
        assert_eq!(m.eval(t, x, 0.0).u, 0.0);
        assert_eq!(m.eval(t, x, 0.0).h_y, 0.0);
    }
}
