//! Good unknowns for tangential derivatives.
//!
//! For `D = d_x^b` and `a = h + H phi'`,
//!
//! ```text
//! eta1 = (u_y + U phi'') / a,    eta2 = (h_y + H phi'') / a,
//! u_b  = D u - eta1 D psi,       h_b  = D h - eta2 D psi.
//! ```
//!
//! In these variables the terms `(u_y + U phi'') D v` and `(h_y + H phi'') D g`,
//! which carry one tangential derivative more than `D (u, h)`, are absorbed by
//! the transport terms. This module builds the fields, inverts the map,
//! measures norm equivalence, checks the cancellation identity pointwise and
//! evaluates the remainders of the transformed system in two independent ways.

use crate::error::{Error, Result};
use crate::fields::{
    field_min, magnetic_total, recover_vg, weighted_dy_bounds, StabilityThresholds, State,
};
use crate::grid::{Cutoff, Grid2D};
use crate::ops::{self, Field};
use crate::norms::MultiIndex;
use crate::outer::{source_r_dx, OuterFlow, Trace};
use crate::system::{self, Coefficients};

/// Largest tangential order handled by the good-unknown routines.
pub const MAX_BETA: usize = 3;
/// Largest tangential order handled by the remainder formulas.
pub const MAX_BETA_REMAINDER: usize = 2;

#[derive(Debug, Clone)]
pub struct EtaFields {
    pub eta1: Field,
    pub eta2: Field,
    /// `h + H phi'`.
    pub denom: Field,
    pub min_denominator: f64,
    /// `sup <y>^{l+1} |eta_i|`.
    pub sup_eta1: f64,
    pub sup_eta2: f64,
}

fn positivity_error(a: &Field, grid: &Grid2D, required: f64) -> Option<Error> {
    let (min, x, y) = field_min(a, grid);
    if min < required || min.is_nan() {
        Some(Error::Positivity {
            min,
            x,
            y,
            required,
        })
    } else {
        None
    }
}

/// Builds `eta1, eta2`; fails when `min (h + H phi') < delta0`.
pub fn eta_fields(
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    th: &StabilityThresholds,
    grid: &Grid2D,
) -> Result<EtaFields> {
    let a = magnetic_total(s, of, c, grid);
    if let Some(e) = positivity_error(&a, grid, th.delta0) {
        return Err(e);
    }
    Ok(eta_unchecked(s, of, c, grid, a, th.l))
}

fn eta_unchecked(s: &State, of: &OuterFlow, c: &Cutoff, grid: &Grid2D, a: Field, l: f64) -> EtaFields {
    let phi2 = c.profile(grid, 2);
    let bu = of.profile(Trace::U, 0, 0, s.t, grid);
    let bh = of.profile(Trace::H, 0, 0, s.t, grid);
    let eta1 = (ops::dy(&s.u, grid) + &ops::outer(&bu, &phi2)) / &a;
    let eta2 = (ops::dy(&s.h, grid) + &ops::outer(&bh, &phi2)) / &a;
    let min_denominator = field_min(&a, grid).0;
    EtaFields {
        sup_eta1: ops::sup_weighted(&eta1, grid, l + 1.0),
        sup_eta2: ops::sup_weighted(&eta2, grid, l + 1.0),
        eta1,
        eta2,
        denom: a,
        min_denominator,
    }
}

/// `(u_b, h_b)` for the tangential index `beta = (0, b, 0)`.
#[derive(Debug, Clone)]
pub struct GoodUnknowns {
    pub b: usize,
    pub u_beta: Field,
    pub h_beta: Field,
    /// `D psi`.
    pub psi_beta: Field,
}

fn check_beta(b: usize, max: usize) -> Result<()> {
    if b > max {
        return Err(Error::IndexBudget {
            requested: b,
            max,
        });
    }
    Ok(())
}

fn check_spatial(beta: MultiIndex) -> Result<usize> {
    if beta.bt != 0 || beta.k != 0 {
        return Err(Error::InvalidParameter(
            "good unknowns take a purely tangential spatial index".into(),
        ));
    }
    Ok(beta.bx)
}

pub fn good_unknowns(
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    th: &StabilityThresholds,
    grid: &Grid2D,
    beta: MultiIndex,
) -> Result<GoodUnknowns> {
    let b = check_spatial(beta)?;
    check_beta(b, MAX_BETA)?;
    let eta = eta_fields(s, of, c, th, grid)?;
    Ok(build_good(s, &eta, grid, b))
}

fn build_good(s: &State, eta: &EtaFields, grid: &Grid2D, b: usize) -> GoodUnknowns {
    let psi = ops::cumtrapz_y(&s.h, grid);
    let psi_beta = ops::dx_pow(&psi, grid, b);
    let u_beta = ops::dx_pow(&s.u, grid, b) - &(&eta.eta1 * &psi_beta);
    let h_beta = ops::dx_pow(&s.h, grid, b) - &(&eta.eta2 * &psi_beta);
    GoodUnknowns {
        b,
        u_beta,
        h_beta,
        psi_beta,
    }
}

/// Recovers `D (u, h)` from the good unknowns:
/// `D u = u_b + (u_y + U phi'') int_0^y h_b / a`, likewise for `h`.
///
/// `X = a int_0^y h_b / a` solves `X_y - eta2 X = h_b`, `X(0) = 0`. Integrating
/// that equation with the trapezoid rule used for the stream function makes the
/// map the exact inverse of [`good_unknowns`] on the grid.
pub fn reconstruct(
    gu: &GoodUnknowns,
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
) -> Result<(Field, Field)> {
    let a = magnetic_total(s, of, c, grid);
    if let Some(e) = positivity_error(&a, grid, f64::MIN_POSITIVE) {
        return Err(e);
    }
    let eta = eta_unchecked(s, of, c, grid, a, 0.0);
    let half = 0.5 * grid.dy;
    let mut x = Field::zeros(grid.shape());
    for i in 0..grid.nx {
        let (hb, e2) = (gu.h_beta.row(i), eta.eta2.row(i));
        for j in 1..grid.ny {
            let rhs = x[[i, j - 1]] * (1.0 + half * e2[j - 1]) + half * (hb[j] + hb[j - 1]);
            let pivot = 1.0 - half * e2[j];
            if pivot.abs() < 1e-12 {
                return Err(Error::InvalidGrid(format!(
                    "dy = {} too coarse for the reconstruction recursion",
                    grid.dy
                )));
            }
            x[[i, j]] = rhs / pivot;
        }
    }
    Ok((
        &gu.u_beta + &(&eta.eta1 * &x),
        &gu.h_beta + &(&eta.eta2 * &x),
    ))
}

/// Norm equivalence between `D (u, h)` and `(u_b, h_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub b: usize,
    pub l: f64,
    /// The equivalence constant `M`.
    pub m_value: f64,
    /// `||(u_b, h_b)||_{L^2_l} / ||D (u, h)||_{L^2_l}`.
    pub ratio: f64,
    /// `M^{-1} (1 - 0.05)` and `M (1 + 0.05)`.
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
    /// `||d_y D (u, h)||_{L^2_l}` against `||d_y (u_b, h_b)|| + M ||h_b||`.
    pub dy_lhs: f64,
    pub dy_rhs: f64,
    pub dy_pass: bool,
}

/// Relative slack applied to both ends of the equivalence sandwich.
pub const EQUIVALENCE_SLACK: f64 = 0.05;

/// The multiplier of `||(U, H)||_inf` in `M`: `sup <y>^{l+1} max(|phi''|, |phi'''|)`,
/// the cutoff factor that multiplies the traces in `eta_i` and `d_y eta_i`.
pub fn equivalence_trace_constant(c: &Cutoff, l: f64, y_max: f64) -> f64 {
    c.weighted_sup(2, l + 1.0, y_max).max(c.weighted_sup(3, l + 1.0, y_max))
}

/// `M = 2/delta0 (C ||(U, H)||_inf + ||<y>^{l+1} d_y (u, h)||_inf + ||<y>^{l+1} d_y^2 (u, h)||_inf)`.
pub fn equivalence_constant(
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    delta0: f64,
    grid: &Grid2D,
    l: f64,
) -> f64 {
    let bu = of.profile(Trace::U, 0, 0, s.t, grid);
    let bh = of.profile(Trace::H, 0, 0, s.t, grid);
    let trace_sup = bu.iter().chain(&bh).fold(0.0f64, |m, v| m.max(v.abs()));
    let (w1, w2) = weighted_dy_bounds(&[&s.u, &s.h], grid, l + 1.0);
    2.0 / delta0 * (equivalence_trace_constant(c, l, grid.y_max) * trace_sup + w1 + w2)
}

fn pair_norm(a: &Field, b: &Field, grid: &Grid2D, l: f64) -> f64 {
    (ops::norm_weighted_sq(a, grid, l) + ops::norm_weighted_sq(b, grid, l)).sqrt()
}

pub fn equivalence_check(
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    th: &StabilityThresholds,
    grid: &Grid2D,
    beta: MultiIndex,
    l: f64,
) -> Result<EquivalenceReport> {
    let gu = good_unknowns(s, of, c, th, grid, beta)?;
    let du = ops::dx_pow(&s.u, grid, gu.b);
    let dh = ops::dx_pow(&s.h, grid, gu.b);
    let m_value = equivalence_constant(s, of, c, th.delta0, grid, l);
    let good = pair_norm(&gu.u_beta, &gu.h_beta, grid, l);
    let direct = pair_norm(&du, &dh, grid, l);
    let ratio = if good == 0.0 && direct == 0.0 { 1.0 } else { good / direct };
    let lower = (1.0 - EQUIVALENCE_SLACK) / m_value;
    let upper = (1.0 + EQUIVALENCE_SLACK) * m_value;
    let dy_lhs = pair_norm(&ops::dy(&du, grid), &ops::dy(&dh, grid), grid, l);
    let dy_rhs = pair_norm(&ops::dy(&gu.u_beta, grid), &ops::dy(&gu.h_beta, grid), grid, l)
        + m_value * ops::norm_weighted(&gu.h_beta, grid, l);
    Ok(EquivalenceReport {
        b: gu.b,
        l,
        m_value,
        ratio,
        lower,
        upper,
        pass: ratio >= lower && ratio <= upper,
        dy_lhs,
        dy_rhs,
        dy_pass: dy_lhs <= dy_rhs * (1.0 + EQUIVALENCE_SLACK),
    })
}

/// `d_x eta_i` by the quotient rule on discrete fields.
pub fn eta_dx(s: &State, eta: &EtaFields, of: &OuterFlow, c: &Cutoff, grid: &Grid2D) -> (Field, Field) {
    let [_, p1, p2, _] = c.profiles(grid);
    let bux = of.profile(Trace::U, 0, 1, s.t, grid);
    let bhx = of.profile(Trace::H, 0, 1, s.t, grid);
    let a_x = ops::dx(&s.h, grid) + &ops::outer(&bhx, &p1);
    let uy_x = ops::dx(&ops::dy(&s.u, grid), grid) + &ops::outer(&bux, &p2);
    let hy_x = ops::dx(&ops::dy(&s.h, grid), grid) + &ops::outer(&bhx, &p2);
    let e1 = (uy_x - &(&eta.eta1 * &a_x)) / &eta.denom;
    let e2 = (hy_x - &(&eta.eta2 * &a_x)) / &eta.denom;
    (e1, e2)
}

/// Residuals of the cancellation identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CancellationReport {
    pub b: usize,
    /// `||LHS - RHS||_{L^2}` for the `u` and `h` identities.
    pub residual_u: f64,
    pub residual_h: f64,
    /// `||LHS||_{L^2}` for scale.
    pub scale_u: f64,
    pub scale_h: f64,
}

impl CancellationReport {
    pub fn residual(&self) -> f64 {
        self.residual_u.hypot(self.residual_h)
    }
}

/// Evaluates both sides of
///
/// ```text
/// -a d_x D h - (h_y + H phi'') D g = -a d_x h_b - a (d_x eta2) D psi
/// -a d_x D u - (u_y + U phi'') D g = -a d_x u_b - a (d_x eta1) D psi
/// ```
///
/// with `D g = -d_x D psi`. The left side contains `b + 1` tangential
/// derivatives of `(u, h)`; the right side only `b` on the good unknowns.
pub fn cancellation_check(
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    beta: MultiIndex,
) -> Result<CancellationReport> {
    let b = check_spatial(beta)?;
    check_beta(b, MAX_BETA)?;
    let a = magnetic_total(s, of, c, grid);
    if let Some(e) = positivity_error(&a, grid, f64::MIN_POSITIVE) {
        return Err(e);
    }
    let eta = eta_unchecked(s, of, c, grid, a, 0.0);
    let gu = build_good(s, &eta, grid, b);
    let (ex1, ex2) = eta_dx(s, &eta, of, c, grid);
    let a = &eta.denom;
    let dg = -ops::dx(&gu.psi_beta, grid);
    let lhs = |f: &Field, eta_i: &Field| -> Field {
        // (f_y + F phi'') = eta_i * a
        -(a * &ops::dx(&ops::dx_pow(f, grid, b), grid)) - &(&(eta_i * a) * &dg)
    };
    let rhs = |f_beta: &Field, ex: &Field| -> Field {
        -(a * &ops::dx(f_beta, grid)) - &(&(a * ex) * &gu.psi_beta)
    };
    let lu = lhs(&s.u, &eta.eta1);
    let lh = lhs(&s.h, &eta.eta2);
    let ru = rhs(&gu.u_beta, &ex1);
    let rh = rhs(&gu.h_beta, &ex2);
    Ok(CancellationReport {
        b,
        residual_u: ops::norm_l2(&(&lu - &ru), grid),
        residual_h: ops::norm_l2(&(&lh - &rh), grid),
        scale_u: ops::norm_l2(&lu, grid),
        scale_h: ops::norm_l2(&lh, grid),
    })
}

/// Remainders of the transformed system for one tangential order.
#[derive(Debug, Clone)]
pub struct RemainderBundle {
    pub b: usize,
    pub r_u: Field,
    pub r_h: Field,
    pub r_psi: Field,
    pub zeta1: Field,
    pub zeta2: Field,
    pub r1: Field,
    pub r2: Field,
    /// `(name, ||.||_{L^2})` for each field above.
    pub norms: Vec<(&'static str, f64)>,
}

fn binom(n: usize, k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64)
}

/// Everything the remainder formulas need at one state.
struct Frame<'a> {
    grid: &'a Grid2D,
    s: &'a State,
    phi: [Vec<f64>; 4],
    /// `d_x^j U` and `d_x^j H` profiles for `j <= b + 1`.
    u_dx: Vec<Vec<f64>>,
    h_dx: Vec<Vec<f64>>,
    v: Field,
    g: Field,
    psi: Field,
    eta: EtaFields,
}

impl<'a> Frame<'a> {
    fn new(s: &'a State, of: &OuterFlow, c: &Cutoff, grid: &'a Grid2D, b: usize) -> Result<Self> {
        let a = magnetic_total(s, of, c, grid);
        if let Some(e) = positivity_error(&a, grid, f64::MIN_POSITIVE) {
            return Err(e);
        }
        let d = recover_vg(s, grid);
        let eta = eta_unchecked(s, of, c, grid, a, 0.0);
        Ok(Self {
            grid,
            s,
            phi: c.profiles(grid),
            u_dx: (0..=b + 1).map(|j| of.profile(Trace::U, 0, j, s.t, grid)).collect(),
            h_dx: (0..=b + 1).map(|j| of.profile(Trace::H, 0, j, s.t, grid)).collect(),
            v: d.v,
            g: d.g,
            psi: d.psi,
            eta,
        })
    }

    fn d(&self, f: &Field, j: usize) -> Field {
        ops::dx_pow(f, self.grid, j)
    }

    fn tr(&self, xp: &[f64], order: usize) -> Field {
        ops::outer(xp, &self.phi[order])
    }

    /// `x`- and `y`-coefficients of the transport operator `T`.
    fn t_coeffs(&self) -> (Field, Field) {
        (
            &self.s.u + &self.tr(&self.u_dx[0], 1),
            &self.v - &self.tr(&self.u_dx[1], 0),
        )
    }

    /// `x`- and `y`-coefficients of the tension operator `B`.
    fn b_coeffs(&self) -> (Field, Field) {
        (
            &self.s.h + &self.tr(&self.h_dx[0], 1),
            &self.g - &self.tr(&self.h_dx[1], 0),
        )
    }

    /// `(ax d_x + ay d_y) f`.
    fn apply(&self, ax: &Field, ay: &Field, f: &Field) -> Field {
        ax * &ops::dx(f, self.grid) + &(ay * &ops::dy(f, self.grid))
    }

    /// `[D, W(x) phi^(k)(y)] f = sum_{j=1}^b C(b,j) W^(j) phi^(k) D^{b-j} f`,
    /// with `W` a trace whose `x`-derivatives are `w_dx`.
    fn comm_trace(&self, w_dx: &[Vec<f64>], k: usize, f: &Field, b: usize) -> Field {
        let mut out = ops::zeros(self.grid);
        for j in 1..=b {
            out = out + &(self.tr(&w_dx[j], k) * &self.d(f, b - j) * binom(b, j));
        }
        out
    }

    /// `[D, (F + W phi') d_x - W_x phi d_y] f` for `(F, W) = (u, U)` or `(h, H)`.
    fn comm_transport(&self, field: &Field, w_dx: &[Vec<f64>], f: &Field, b: usize) -> Field {
        let fx = ops::dx(f, self.grid);
        let fy = ops::dy(f, self.grid);
        let mut out = ops::zeros(self.grid);
        for j in 1..=b {
            let coef_x = self.d(field, j) + &self.tr(&w_dx[j], 1);
            let coef_y = self.tr(&w_dx[j + 1], 0);
            let term = coef_x * &self.d(&fx, b - j) - &(coef_y * &self.d(&fy, b - j));
            out = out + &(term * binom(b, j));
        }
        out
    }

    /// `sum_{0<j<b} C(b,j) D^j w D^{b-j} f`.
    fn inner_sum(&self, w: &Field, f: &Field, b: usize) -> Field {
        let mut out = ops::zeros(self.grid);
        for j in 1..b {
            out = out + &(self.d(w, j) * &self.d(f, b - j) * binom(b, j));
        }
        out
    }
}

/// `d_t eta_i` from given `(u_t, h_t)`.
pub fn eta_rates(
    s: &State,
    rates: (&Field, &Field),
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
) -> (Field, Field) {
    let a = magnetic_total(s, of, c, grid);
    let eta = eta_unchecked(s, of, c, grid, a, 0.0);
    let [_, p1, p2, _] = c.profiles(grid);
    let ut = of.profile(Trace::U, 1, 0, s.t, grid);
    let ht = of.profile(Trace::H, 1, 0, s.t, grid);
    let a_t = rates.1 + &ops::outer(&ht, &p1);
    let e1 = (ops::dy(rates.0, grid) + &ops::outer(&ut, &p2) - &(&eta.eta1 * &a_t)) / &eta.denom;
    let e2 = (ops::dy(rates.1, grid) + &ops::outer(&ht, &p2) - &(&eta.eta2 * &a_t)) / &eta.denom;
    (e1, e2)
}

/// Remainders with `d_t eta_i` taken from one prior time level.
#[allow(clippy::too_many_arguments)]
pub fn remainders(
    s: &State,
    history: &[State],
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    beta: MultiIndex,
    coeffs: Coefficients,
) -> Result<RemainderBundle> {
    let prev = history.last().ok_or(Error::MissingHistory)?;
    let dt = s.t - prev.t;
    if dt <= 0.0 {
        return Err(Error::InvalidParameter("history must precede the current state".into()));
    }
    let a0 = magnetic_total(prev, of, c, grid);
    let a1 = magnetic_total(s, of, c, grid);
    let e0 = eta_unchecked(prev, of, c, grid, a0, 0.0);
    let e1 = eta_unchecked(s, of, c, grid, a1, 0.0);
    let r1 = (&e1.eta1 - &e0.eta1) / dt;
    let r2 = (&e1.eta2 - &e0.eta2) / dt;
    remainders_with_rates(s, (&r1, &r2), of, c, grid, beta, coeffs)
}

/// Direct evaluation of the remainder sums with supplied `d_t eta_i`.
#[allow(clippy::too_many_arguments)]
pub fn remainders_with_rates(
    s: &State,
    eta_t: (&Field, &Field),
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    beta: MultiIndex,
    coeffs: Coefficients,
) -> Result<RemainderBundle> {
    let b = check_spatial(beta)?;
    check_beta(b, MAX_BETA_REMAINDER)?;
    let fr = Frame::new(s, of, c, grid, b)?;
    let (mu, kappa) = (coeffs.mu, coeffs.kappa);
    let (u, h) = (&s.u, &s.h);
    let uy = ops::dy(u, grid);
    let hy = ops::dy(h, grid);

    // R_u, R_h: the commutators left over after differentiating the system.
    let lin_u = &fr.tr(&fr.u_dx[1], 1) * u - &(&fr.tr(&fr.h_dx[1], 1) * h);
    let lin_h = &fr.tr(&fr.h_dx[1], 1) * u - &(&fr.tr(&fr.u_dx[1], 1) * h);
    let ct_u_u = fr.comm_transport(u, &fr.u_dx, u, b);
    let ct_u_h = fr.comm_transport(u, &fr.u_dx, h, b);
    let ct_h_u = fr.comm_transport(h, &fr.h_dx, u, b);
    let ct_h_h = fr.comm_transport(h, &fr.h_dx, h, b);
    let r_u = -fr.d(&lin_u, b) - &fr.comm_trace(&fr.u_dx, 2, &fr.v, b)
        + &fr.comm_trace(&fr.h_dx, 2, &fr.g, b)
        - &ct_u_u
        + &ct_h_h
        - &(fr.inner_sum(&fr.v, &uy, b) - &fr.inner_sum(&fr.g, &hy, b));
    let r_h = -fr.d(&lin_h, b) - &fr.comm_trace(&fr.h_dx, 2, &fr.v, b)
        + &fr.comm_trace(&fr.u_dx, 2, &fr.g, b)
        - &ct_u_h
        + &ct_h_u
        - &(fr.inner_sum(&fr.v, &hy, b) - &fr.inner_sum(&fr.g, &uy, b));

    // R_psi: commutators of the stream-function equation.
    let hx_phi_u = &fr.tr(&fr.h_dx[1], 0) * u;
    let r_psi = -fr.d(&hx_phi_u, b)
        - &fr.comm_trace(&fr.h_dx, 1, &fr.v, b)
        - &fr.comm_transport(u, &fr.u_dx, &fr.psi, b)
        - &fr.inner_sum(&fr.v, h, b);

    // zeta_i: the transported coefficients.
    let (tx, ty) = fr.t_coeffs();
    let (bx, by) = fr.b_coeffs();
    let (ex1, ex2) = eta_dx(s, &fr.eta, of, c, grid);
    let e1y = ops::dy(&fr.eta.eta1, grid);
    let e2y = ops::dy(&fr.eta.eta2, grid);
    let transport = |ex: &Field, ey: &Field, cx: &Field, cy: &Field| cx * ex + &(cy * ey);
    let zeta1 = eta_t.0 + &transport(&ex1, &e1y, &tx, &ty) - &transport(&ex2, &e2y, &bx, &by)
        - &(ops::dyy(&fr.eta.eta1, grid) * mu)
        + &(&fr.eta.eta1 * &e2y * (kappa - mu));
    let zeta2 = eta_t.1 + &transport(&ex2, &e2y, &tx, &ty) - &transport(&ex1, &e1y, &bx, &by)
        - &(ops::dyy(&fr.eta.eta2, grid) * kappa);

    // R_1, R_2.
    let (dr1, dr2, dr3) = source_r_dx(of, c, grid, s.t, mu, kappa, b);
    let dh = fr.d(h, b);
    let dpsi = fr.d(&fr.psi, b);
    let (e1, e2) = (&fr.eta.eta1, &fr.eta.eta2);
    let coef1 = &e1y * (2.0 * mu) + &(&by * e2) + &(e1 * e2 * (mu - kappa));
    let coef2 = &e2y * (2.0 * kappa) + &(&by * e1);
    let r1 = &dr1 - &(e1 * &dr3) + &r_u - &(e1 * &r_psi) + &(coef1 * &dh) - &(&zeta1 * &dpsi);
    let r2 = &dr2 - &(e2 * &dr3) + &r_h - &(e2 * &r_psi) + &(coef2 * &dh) - &(&zeta2 * &dpsi);

    let n = |f: &Field| ops::norm_l2(f, grid);
    let norms = vec![
        ("R_u", n(&r_u)),
        ("R_h", n(&r_h)),
        ("R_psi", n(&r_psi)),
        ("zeta1", n(&zeta1)),
        ("zeta2", n(&zeta2)),
        ("R1", n(&r1)),
        ("R2", n(&r2)),
    ];
    Ok(RemainderBundle {
        b,
        r_u,
        r_h,
        r_psi,
        zeta1,
        zeta2,
        r1,
        r2,
        norms,
    })
}

/// Residual bookkeeping: applies the transformed operators directly to
/// `(u_b, h_b)` with `d_t` taken from the evolution right-hand side.
///
/// Returns `(R1, R2)` where
/// `R1 = d_t u_b + T u_b - B h_b - mu d_y^2 u_b + (kappa - mu) eta1 d_y h_b` and
/// `R2 = d_t h_b + T h_b - B u_b - kappa d_y^2 h_b`.
pub fn bookkeeping_remainders(
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    beta: MultiIndex,
    coeffs: Coefficients,
) -> Result<(Field, Field)> {
    let b = check_spatial(beta)?;
    check_beta(b, MAX_BETA_REMAINDER)?;
    let fr = Frame::new(s, of, c, grid, b)?;
    let gu = build_good(s, &fr.eta, grid, b);
    let (ut, ht) = system::tendency(s, of, c, grid, coeffs, s.t);
    let (et1, et2) = eta_rates(s, (&ut, &ht), of, c, grid);
    let dpsi_t = fr.d(&ops::cumtrapz_y(&ht, grid), b);
    let (e1, e2) = (&fr.eta.eta1, &fr.eta.eta2);
    let ub_t = fr.d(&ut, b) - &(&et1 * &gu.psi_beta) - &(e1 * &dpsi_t);
    let hb_t = fr.d(&ht, b) - &(&et2 * &gu.psi_beta) - &(e2 * &dpsi_t);
    let (tx, ty) = fr.t_coeffs();
    let (bx, by) = fr.b_coeffs();
    let r1 = ub_t + &fr.apply(&tx, &ty, &gu.u_beta) - &fr.apply(&bx, &by, &gu.h_beta)
        - &(ops::dyy(&gu.u_beta, grid) * coeffs.mu)
        + &(e1 * &ops::dy(&gu.h_beta, grid) * (coeffs.kappa - coeffs.mu));
    let r2 = hb_t + &fr.apply(&tx, &ty, &gu.h_beta) - &fr.apply(&bx, &by, &gu.u_beta)
        - &(ops::dyy(&gu.h_beta, grid) * coeffs.kappa);
    Ok((r1, r2))
}

/// Direct remainders with `d_t eta` taken from the evolution right-hand side,
/// the counterpart of [`bookkeeping_remainders`].
pub fn remainders_from_tendency(
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    beta: MultiIndex,
    coeffs: Coefficients,
) -> Result<RemainderBundle> {
    let (ut, ht) = system::tendency(s, of, c, grid, coeffs, s.t);
    let (et1, et2) = eta_rates(s, (&ut, &ht), of, c, grid);
    remainders_with_rates(s, (&et1, &et2), of, c, grid, beta, coeffs)
}
