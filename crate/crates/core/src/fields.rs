//! Homogenized state `(u, h)`, derived normal components and stream function,
//! physical variables, and initial-data validation.

use crate::error::{Error, Result};
use crate::grid::{Cutoff, Grid2D};
use crate::ops::{self, Field};
use crate::outer::{OuterFlow, Trace};
use ndarray::Zip;
use serde::{Deserialize, Serialize};

/// Perturbations `u = u1 - U phi'` and `h = h1 - H phi'` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub h: Field,
    pub t: f64,
}

impl State {
    pub fn zeros(grid: &Grid2D, t: f64) -> Self {
        Self {
            u: ops::zeros(grid),
            h: ops::zeros(grid),
            t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.h.iter()).all(|v| v.is_finite())
    }

    /// `||(u, h)||_{L^2}` of the difference with another state.
    pub fn distance(&self, other: &State, grid: &Grid2D) -> f64 {
        let du = &self.u - &other.u;
        let dh = &self.h - &other.h;
        (ops::norm_weighted_sq(&du, grid, 0.0) + ops::norm_weighted_sq(&dh, grid, 0.0)).sqrt()
    }
}

/// `v = -d_y^-1 d_x u`, `g = -d_y^-1 d_x h`, `psi = d_y^-1 h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFields {
    pub v: Field,
    pub g: Field,
    pub psi: Field,
}

pub fn recover_vg(s: &State, grid: &Grid2D) -> DerivedFields {
    let v = -ops::cumtrapz_y(&ops::dx(&s.u, grid), grid);
    let g = -ops::cumtrapz_y(&ops::dx(&s.h, grid), grid);
    let psi = ops::cumtrapz_y(&s.h, grid);
    DerivedFields { v, g, psi }
}

/// Physical velocity and magnetic components.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalState {
    pub u1: Field,
    pub u2: Field,
    pub h1: Field,
    pub h2: Field,
    pub t: f64,
}

/// `u1 = u + U phi'`, `u2 = v - U_x phi`, `h1 = h + H phi'`, `h2 = g - H_x phi`.
pub fn to_physical(s: &State, of: &OuterFlow, c: &Cutoff, grid: &Grid2D) -> PhysicalState {
    let d = recover_vg(s, grid);
    let [phi, dphi, ..] = c.profiles(grid);
    let t = s.t;
    let u = of.profile(Trace::U, 0, 0, t, grid);
    let ux = of.profile(Trace::U, 0, 1, t, grid);
    let h = of.profile(Trace::H, 0, 0, t, grid);
    let hx = of.profile(Trace::H, 0, 1, t, grid);
    PhysicalState {
        u1: &s.u + &ops::outer(&u, &dphi),
        u2: &d.v - &ops::outer(&ux, &phi),
        h1: &s.h + &ops::outer(&h, &dphi),
        h2: &d.g - &ops::outer(&hx, &phi),
        t,
    }
}

/// Inverse of [`to_physical`] for the evolved components `(u, h)`.
pub fn from_physical(ps: &PhysicalState, of: &OuterFlow, c: &Cutoff, grid: &Grid2D) -> State {
    let dphi = c.profile(grid, 1);
    let u = of.profile(Trace::U, 0, 0, ps.t, grid);
    let h = of.profile(Trace::H, 0, 0, ps.t, grid);
    State {
        u: &ps.u1 - &ops::outer(&u, &dphi),
        h: &ps.h1 - &ops::outer(&h, &dphi),
        t: ps.t,
    }
}

/// `h + H phi'`, the denominator of the good-unknown construction.
pub fn magnetic_total(s: &State, of: &OuterFlow, c: &Cutoff, grid: &Grid2D) -> Field {
    let dphi = c.profile(grid, 1);
    let h = of.profile(Trace::H, 0, 0, s.t, grid);
    &s.h + &ops::outer(&h, &dphi)
}

/// Minimum of a field with its location `(x, y)`.
pub fn field_min(f: &Field, grid: &Grid2D) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for ((i, j), &v) in f.indexed_iter() {
        if v < best.0 || v.is_nan() {
            best = (v, grid.x_nodes[i], grid.y_nodes[j]);
        }
    }
    best
}

/// Positivity margin and weight exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityThresholds {
    pub delta0: f64,
    pub l: f64,
}

impl Default for StabilityThresholds {
    fn default() -> Self {
        Self { delta0: 0.1, l: 0.0 }
    }
}

impl StabilityThresholds {
    pub fn new(delta0: f64, l: f64) -> Result<Self> {
        let th = Self { delta0, l };
        th.validate()?;
        Ok(th)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta0 = {} must be > 0",
                self.delta0
            )));
        }
        if !(self.l >= 0.0 && self.l.is_finite()) {
            return Err(Error::InvalidParameter(format!("l = {} must be >= 0", self.l)));
        }
        Ok(())
    }
}

/// Default tolerance for the far-field decay surrogate.
pub const FAR_TOL: f64 = 1e-6;

/// Outcome of [`validate_initial`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// `min (h + H phi')` and where it is attained.
    pub h1_min: f64,
    pub h1_min_at: (f64, f64),
    /// `max <y>^{l+1} |d_y^i (u, h)|` for `i = 1, 2`.
    pub w1: f64,
    pub w2: f64,
    pub positivity_ok: bool,
    pub bounds_ok: bool,
    /// `max |u(., 0)|` and `max |d_y h(., 0)|` (one-sided stencil).
    pub wall_u: f64,
    pub wall_dyh: f64,
    pub wall_ok: bool,
    /// `max |u|, |h|` on the top row.
    pub far_field: f64,
    pub far_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.positivity_ok && self.bounds_ok && self.wall_ok && self.far_ok
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.positivity_ok {
            out.push(format!(
                "min(h + H phi') = {:.3e} at (x = {:.3}, y = {:.3}) below 2 delta0",
                self.h1_min, self.h1_min_at.0, self.h1_min_at.1
            ));
        }
        if !self.bounds_ok {
            out.push(format!(
                "weighted derivative bounds W1 = {:.3e}, W2 = {:.3e} exceed 1/(2 delta0)",
                self.w1, self.w2
            ));
        }
        if !self.wall_ok {
            out.push(format!(
                "wall residuals |u| = {:.3e}, |d_y h| = {:.3e}",
                self.wall_u, self.wall_dyh
            ));
        }
        if !self.far_ok {
            out.push(format!("far-field residual {:.3e}", self.far_field));
        }
        out
    }
}

/// `max <y>^p |d_y^i f|` for `i = 1, 2` over several fields.
pub fn weighted_dy_bounds(fields: &[&Field], grid: &Grid2D, p: f64) -> (f64, f64) {
    let mut w1: f64 = 0.0;
    let mut w2: f64 = 0.0;
    for f in fields {
        w1 = w1.max(ops::sup_weighted(&ops::dy(f, grid), grid, p));
        w2 = w2.max(ops::sup_weighted(&ops::dyy(f, grid), grid, p));
    }
    (w1, w2)
}

/// Checks positivity, weighted derivative bounds, wall compatibility and decay
/// of initial data. Never fails; callers decide what to do with the report.
pub fn validate_initial(
    s0: &State,
    of: &OuterFlow,
    c: &Cutoff,
    th: &StabilityThresholds,
    grid: &Grid2D,
) -> ValidationReport {
    let a = magnetic_total(s0, of, c, grid);
    let (h1_min, x, y) = field_min(&a, grid);
    let (w1, w2) = weighted_dy_bounds(&[&s0.u, &s0.h], grid, th.l + 1.0);
    let dyh = ops::dy(&s0.h, grid);
    let wall_u = s0.u.column(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let wall_dyh = dyh.column(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let top = grid.ny - 1;
    let far_field = Zip::from(s0.u.column(top))
        .and(s0.h.column(top))
        .fold(0.0f64, |m, a, b| m.max(a.abs()).max(b.abs()));
    let bound = 0.5 / th.delta0;
    ValidationReport {
        h1_min,
        h1_min_at: (x, y),
        w1,
        w2,
        positivity_ok: h1_min >= 2.0 * th.delta0,
        bounds_ok: w1 <= bound && w2 <= bound,
        wall_u,
        wall_dyh,
        // the one-sided derivative of a profile with vanishing wall slope is O(dy^2)
        wall_ok: wall_u <= 1e-12 && wall_dyh <= 5.0 * grid.dy * grid.dy,
        far_field,
        far_ok: far_field <= FAR_TOL,
    }
}

/// Smooth taper equal to 1 below `0.6 y_max` and exactly 0 above `0.9 y_max`,
/// so shipped initial data satisfy the far-field condition exactly.
pub fn taper(y: f64, y_max: f64) -> f64 {
    1.0 - smoothstep((y - 0.6 * y_max) / (0.3 * y_max))
}

/// `exp(-1/s) / (exp(-1/s) + exp(-1/(1-s)))`, clamped to 0 and 1 outside `(0, 1)`.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

/// Registry of initial-data families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialFamily {
    Zero,
    /// `u1 = U (1 - e^{-rate y})`, monotone in `y`.
    MonotoneShear {
        rate: f64,
        h_wall: f64,
        h_wiggle: f64,
    },
    /// `u = amp y e^{-y} (1 - y/2) (1 + wiggle sin x)`, which puts an inflection
    /// point and a sign change into the profile.
    NonMonotoneShear {
        amp: f64,
        wiggle: f64,
        h_wall: f64,
        h_wiggle: f64,
    },
    /// The manufactured pair at `t = 0` (see [`crate::mms::ManufacturedPair`]).
    Manufactured,
}

impl Default for InitialFamily {
    fn default() -> Self {
        InitialFamily::NonMonotoneShear {
            amp: 1.0,
            wiggle: 0.3,
            h_wall: 0.5,
            h_wiggle: 0.2,
        }
    }
}

/// `h_wall (1 + y) e^{-y} (1 + h_wiggle cos x)`: zero wall slope, positive near
/// the wall.
fn magnetic_profile(x: f64, y: f64, h_wall: f64, h_wiggle: f64) -> f64 {
    h_wall * (1.0 + y) * (-y).exp() * (1.0 + h_wiggle * x.cos())
}

impl InitialFamily {
    pub fn build(&self, grid: &Grid2D, of: &OuterFlow, c: &Cutoff) -> State {
        let ym = grid.y_max;
        match *self {
            InitialFamily::Zero => State::zeros(grid, 0.0),
            InitialFamily::MonotoneShear {
                rate,
                h_wall,
                h_wiggle,
            } => {
                let u = ops::sample(grid, |x, y| {
                    let big_u = of.eval(Trace::U, 0, 0, 0.0, x);
                    big_u * (1.0 - (-rate * y).exp() - c.eval(y, 1)) * taper(y, ym)
                });
                let h = ops::sample(grid, |x, y| {
                    magnetic_profile(x, y, h_wall, h_wiggle) * taper(y, ym)
                });
                State { u, h, t: 0.0 }
            }
            InitialFamily::NonMonotoneShear {
                amp,
                wiggle,
                h_wall,
                h_wiggle,
            } => {
                let u = ops::sample(grid, |x, y| {
                    amp * y * (-y).exp() * (1.0 - 0.5 * y) * (1.0 + wiggle * x.sin()) * taper(y, ym)
                });
                let h = ops::sample(grid, |x, y| {
                    magnetic_profile(x, y, h_wall, h_wiggle) * taper(y, ym)
                });
                State { u, h, t: 0.0 }
            }
            InitialFamily::Manufactured => {
                crate::mms::AnalyticState::state(&crate::mms::ManufacturedPair::default(), grid, 0.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taper_plateaus() {
        assert_eq!(taper(0.0, 12.0), 1.0);
        assert_eq!(taper(7.2, 12.0), 1.0);
        assert_eq!(taper(10.8, 12.0), 0.0);
        assert_eq!(taper(12.0, 12.0), 0.0);
        let mid = taper(9.0, 12.0);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn thresholds_reject_nonpositive_delta() {
        assert!(StabilityThresholds::new(0.0, 0.0).is_err());
        assert!(StabilityThresholds::new(-1.0, 0.0).is_err());
        assert!(StabilityThresholds::new(0.1, -0.5).is_err());
        assert!(StabilityThresholds::new(0.1, 1.0).is_ok());
    }
}
