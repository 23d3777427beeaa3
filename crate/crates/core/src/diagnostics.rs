//! Run-time monitors, the ODE majorant and the two-solution contraction
//! experiment.

use crate::error::{Error, Result};
use crate::fields::{field_min, magnetic_total, recover_vg, weighted_dy_bounds, StabilityThresholds, State};
use crate::good_unknowns::{equivalence_constant, good_unknowns};
use crate::grid::{Cutoff, Grid2D};
use crate::norms::{spatial_derivative, MultiIndex};
use crate::ops::{self, Field};
use crate::outer::{outer_energy, source_r_dx, OuterFlow, Trace};
use crate::solver::{PrimalSolver, SolverConfig};
use crate::system::Coefficients;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    /// Order of the monitored norms (at most 3).
    pub m: usize,
    /// Evaluate the energy functional, its dissipation and the forcing series.
    pub majorant: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self { m: 2, majorant: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorSample {
    pub t: f64,
    /// Spatial `H^m_l` norm of `(u, h)`.
    pub energy: f64,
    /// `sup <y>^{l+1} |d_y (u, h)|` and `sup <y>^{l+1} |d_y^2 (u, h)|`.
    pub w1: f64,
    pub w2: f64,
    /// `min (h + H phi')`.
    pub hmin: f64,
    pub m_value: f64,
    /// Energy functional with the top tangential order replaced by good unknowns;
    /// `None` when `h + H phi'` is not positive.
    pub functional: Option<f64>,
    /// Its dissipation rate (same structure with one more `d_y`).
    pub dissipation: Option<f64>,
    /// Constant-free forcing series of the majorant.
    pub f_hat: Option<f64>,
}

/// Indices `|alpha| <= m` whose tangential part is at most `m - 1`.
fn lower_indices(m: usize) -> Vec<MultiIndex> {
    MultiIndex::spatial_up_to(m)
        .into_iter()
        .filter(|a| m == 0 || a.bx < m)
        .collect()
}

fn sum_weighted_sq(fields: &[&Field], grid: &Grid2D, l: f64, alphas: &[MultiIndex], extra_dy: bool) -> f64 {
    alphas
        .iter()
        .map(|a| {
            fields
                .iter()
                .map(|f| {
                    let mut d = spatial_derivative(f, grid, *a);
                    if extra_dy {
                        d = ops::dy(&d, grid);
                    }
                    ops::norm_weighted_sq(&d, grid, l + a.k as f64)
                })
                .sum::<f64>()
        })
        .sum()
}

/// `(functional, dissipation)` when the good unknowns exist.
fn energy_functional(
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    th: &StabilityThresholds,
    grid: &Grid2D,
    m: usize,
) -> Option<(f64, f64)> {
    let alphas = lower_indices(m);
    let low = sum_weighted_sq(&[&s.u, &s.h], grid, th.l, &alphas, false);
    let low_dy = sum_weighted_sq(&[&s.u, &s.h], grid, th.l, &alphas, true);
    if m == 0 {
        return Some((low, low_dy));
    }
    let loose = StabilityThresholds {
        delta0: f64::MIN_POSITIVE,
        l: th.l,
    };
    let gu = good_unknowns(s, of, c, &loose, grid, MultiIndex::tangential(m)).ok()?;
    let k = 25.0 / th.delta0.powi(4);
    let top = ops::norm_weighted_sq(&gu.u_beta, grid, th.l) + ops::norm_weighted_sq(&gu.h_beta, grid, th.l);
    let top_dy = ops::norm_weighted_sq(&ops::dy(&gu.u_beta, grid), grid, th.l)
        + ops::norm_weighted_sq(&ops::dy(&gu.h_beta, grid), grid, th.l);
    Some((low + k * top, low_dy + k * top_dy))
}

/// Constant-free forcing series `F^(t)`: the majorant uses `F = C F^`.
pub fn forcing_series(
    of: &OuterFlow,
    c: &Cutoff,
    delta0: f64,
    l: f64,
    grid: &Grid2D,
    m: usize,
    coeffs: Coefficients,
    t: f64,
) -> f64 {
    let mut low = 0.0;
    for a in lower_indices(m) {
        let (r1, r2, _) = source_r_dx(of, c, grid, t, coeffs.mu, coeffs.kappa, a.bx);
        for r in [r1, r2] {
            let d = spatial_derivative(&r, grid, MultiIndex::new(0, 0, a.k));
            low += ops::norm_weighted_sq(&d, grid, l + a.k as f64);
        }
    }
    let (r1, r2, r3) = source_r_dx(of, c, grid, t, coeffs.mu, coeffs.kappa, m);
    let d4 = delta0.powi(-4);
    let top = ops::norm_weighted_sq(&r1, grid, l)
        + ops::norm_weighted_sq(&r2, grid, l)
        + 4.0 * d4 * ops::norm_weighted_sq(&r3, grid, -1.0);
    let traces = (1.0 + outer_energy(of, m + 2, t, grid)).powi(3);
    low + d4 * top + delta0.powi(-8) * traces
}

pub fn monitor(
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    th: &StabilityThresholds,
    grid: &Grid2D,
    cfg: &MonitorConfig,
    coeffs: Coefficients,
) -> MonitorSample {
    let m = cfg.m.min(3);
    let energy = crate::norms::MultiIndex::spatial_up_to(m)
        .iter()
        .map(|a| {
            [&s.u, &s.h]
                .iter()
                .map(|f| ops::norm_weighted_sq(&spatial_derivative(f, grid, *a), grid, th.l + a.k as f64))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt();
    let (w1, w2) = weighted_dy_bounds(&[&s.u, &s.h], grid, th.l + 1.0);
    let hmin = field_min(&magnetic_total(s, of, c, grid), grid).0;
    let m_value = equivalence_constant(s, of, c, th.delta0, grid, th.l);
    let (functional, dissipation, f_hat) = if cfg.majorant {
        let fd = if hmin > 0.0 {
            energy_functional(s, of, c, th, grid, m)
        } else {
            None
        };
        (
            fd.map(|p| p.0),
            fd.map(|p| p.1),
            Some(forcing_series(of, c, th.delta0, th.l, grid, m, coeffs, s.t)),
        )
    } else {
        (None, None, None)
    };
    MonitorSample {
        t: s.t,
        energy,
        w1,
        w2,
        hmin,
        m_value,
        functional,
        dissipation,
        f_hat,
    }
}

/// Data of the Riccati-type comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantInput {
    pub f0: f64,
    pub t: Vec<f64>,
    /// Constant-free forcing `F^` on the times `t`.
    pub f_hat: Vec<f64>,
    pub c: f64,
    pub delta0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorantReport {
    /// `z(t)` on the input times; `None` past the horizon.
    pub z: Vec<Option<f64>>,
    /// Time where the bracket reaches zero, if inside the sampled window.
    pub horizon: Option<f64>,
}

fn cumulative_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for i in 1..t.len() {
        out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    }
    out
}

/// `z(t) = (F0 + int F) {1 - 2 C delta0^{-8} (F0 + int F)^2 t}^{-1/2}` with `F = C F^`.
pub fn ode_majorant(mi: &MajorantInput) -> Result<MajorantReport> {
    if !(mi.c > 0.0) || !(mi.f0 >= 0.0) || !(mi.delta0 > 0.0) || mi.t.len() != mi.f_hat.len() {
        return Err(Error::MajorantBracket);
    }
    let k = 2.0 * mi.c * mi.delta0.powi(-8);
    let integral = cumulative_trapezoid(&mi.t, &mi.f_hat);
    let bracket: Vec<f64> = mi
        .t
        .iter()
        .zip(&integral)
        .map(|(&t, &i)| {
            let a = mi.f0 + mi.c * i;
            1.0 - k * a * a * t
        })
        .collect();
    if bracket.first().is_some_and(|&b| !(b > 0.0)) {
        return Err(Error::MajorantBracket);
    }
    let mut z = Vec::with_capacity(mi.t.len());
    let mut horizon = None;
    for i in 0..mi.t.len() {
        if horizon.is_some() || bracket[i] <= 0.0 {
            if horizon.is_none() {
                let (b0, b1) = (bracket[i - 1], bracket[i]);
                let (t0, t1) = (mi.t[i - 1], mi.t[i]);
                horizon = Some(t0 + (t1 - t0) * b0 / (b0 - b1));
            }
            z.push(None);
        } else {
            z.push(Some((mi.f0 + mi.c * integral[i]) / bracket[i].sqrt()));
        }
    }
    Ok(MajorantReport { z, horizon })
}

/// Left-hand side of the comparison: functional plus integrated dissipation.
pub fn majorant_lhs(t: &[f64], functional: &[f64], dissipation: &[f64]) -> Vec<f64> {
    cumulative_trapezoid(t, dissipation)
        .iter()
        .zip(functional)
        .map(|(d, f)| f + d)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorantComparison {
    pub report: MajorantReport,
    /// `z - lhs` per sample (negative when violated, `None` past the horizon).
    pub margins: Vec<Option<f64>>,
    /// First time where `lhs > z` or the horizon is crossed.
    pub first_failure: Option<f64>,
    pub holds: bool,
}

pub fn compare_majorant(mi: &MajorantInput, lhs: &[f64]) -> Result<MajorantComparison> {
    let report = ode_majorant(mi)?;
    let margins: Vec<Option<f64>> = report.z.iter().zip(lhs).map(|(z, l)| z.map(|z| z - l)).collect();
    let first_failure = margins
        .iter()
        .zip(&mi.t)
        .find(|(m, _)| m.map_or(true, |m| m < 0.0))
        .map(|(_, &t)| t);
    Ok(MajorantComparison {
        holds: first_failure.is_none(),
        report,
        margins,
        first_failure,
    })
}

/// Largest constant whose blow-up horizon lies beyond the last sample.
pub fn horizon_constant(f0: f64, t: &[f64], f_hat: &[f64], delta0: f64) -> Option<f64> {
    let ok = |c: f64| {
        let mi = MajorantInput {
            f0,
            t: t.to_vec(),
            f_hat: f_hat.to_vec(),
            c,
            delta0,
        };
        ode_majorant(&mi).is_ok_and(|r| r.horizon.is_none())
    };
    let (mut lo, mut hi) = (1e-300f64, 1e300f64);
    if !ok(lo) {
        return None;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Inputs of the comparison assembled from monitor samples: `F0` is the
/// functional at the first sample and the compared quantity is `E(t)^2`.
/// `None` if a sample lacks the majorant fields.
pub fn majorant_series(samples: &[MonitorSample]) -> Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let f0 = samples.first()?.functional?;
    let t = samples.iter().map(|s| s.t).collect();
    let f_hat = samples.iter().map(|s| s.f_hat).collect::<Option<Vec<_>>>()?;
    let e2 = samples.iter().map(|s| s.energy * s.energy).collect();
    Some((f0, t, f_hat, e2))
}

/// `E(t)^2 <= z(t)` with constant `c` on the sampled run.
pub fn energy_comparison(samples: &[MonitorSample], c: f64, delta0: f64) -> Result<MajorantComparison> {
    let (f0, t, f_hat, e2) = majorant_series(samples).ok_or(Error::MajorantBracket)?;
    compare_majorant(
        &MajorantInput {
            f0,
            t,
            f_hat,
            c,
            delta0,
        },
        &e2,
    )
}

/// Last sampled time up to which `lhs <= z` holds without interruption.
pub fn certified_time(mi: &MajorantInput, lhs: &[f64]) -> Result<f64> {
    let cmp = compare_majorant(mi, lhs)?;
    let last = *mi.t.last().unwrap_or(&0.0);
    Ok(match cmp.first_failure {
        None => last,
        Some(tf) => mi.t.iter().copied().take_while(|&t| t < tf).last().unwrap_or(mi.t[0]),
    })
}

/// Constant maximizing [`certified_time`] over a logarithmic scan of
/// `[1e-60, 1e20]` (ties go to the smallest constant). Returns the constant
/// and the time it certifies.
pub fn best_majorant_constant(
    f0: f64,
    t: &[f64],
    f_hat: &[f64],
    lhs: &[f64],
    delta0: f64,
) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for e in -600..=200 {
        let c = 10f64.powf(e as f64 / 10.0);
        let mi = MajorantInput {
            f0,
            t: t.to_vec(),
            f_hat: f_hat.to_vec(),
            c,
            delta0,
        };
        if let Ok(tc) = certified_time(&mi, lhs) {
            if best.map_or(true, |(_, b)| tc > b) {
                best = Some((c, tc));
            }
        }
    }
    best
}

/// Range `[c_lo, c_hi]` of constants for which the comparison holds on the
/// whole sampled window. `None` if no constant works.
pub fn feasible_majorant_constants(
    f0: f64,
    t: &[f64],
    f_hat: &[f64],
    lhs: &[f64],
    delta0: f64,
) -> Option<(f64, f64)> {
    let holds = |c: f64| {
        let mi = MajorantInput {
            f0,
            t: t.to_vec(),
            f_hat: f_hat.to_vec(),
            c,
            delta0,
        };
        compare_majorant(&mi, lhs).is_ok_and(|r| r.holds)
    };
    let no_horizon = |c: f64| {
        let mi = MajorantInput {
            f0,
            t: t.to_vec(),
            f_hat: f_hat.to_vec(),
            c,
            delta0,
        };
        ode_majorant(&mi).is_ok_and(|r| r.horizon.is_none())
    };
    // Largest constant keeping the horizon outside the window.
    let (mut lo, mut hi) = (1e-300f64, 1e300f64);
    if !no_horizon(lo) {
        return None;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if no_horizon(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c_hi = lo;
    if !holds(c_hi) {
        return None;
    }
    let (mut lo, mut hi) = (1e-300f64, c_hi);
    if holds(lo) {
        return Some((lo, c_hi));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some((hi, c_hi))
}

/// Coefficients and contraction variables of the difference system at one time.
#[derive(Debug, Clone)]
pub struct UniquenessState {
    pub ubar: Field,
    pub hbar: Field,
    pub psitilde: Field,
    pub a1: Field,
    pub b1: Field,
    pub c1: Field,
    pub a2: Field,
    pub b2: Field,
    pub c2: Field,
}

/// Builds the contraction variables from two solutions; `prev2` supplies
/// `d_t eta^2` by a backward difference (omitted terms are zero without it).
#[allow(clippy::too_many_arguments)]
pub fn uniqueness_state(
    s1: &State,
    s2: &State,
    prev2: Option<&State>,
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    coeffs: Coefficients,
) -> Result<UniquenessState> {
    let a2f = magnetic_total(s2, of, c, grid);
    let (min, x, y) = field_min(&a2f, grid);
    if !(min > 0.0) {
        return Err(Error::Positivity {
            min,
            x,
            y,
            required: 0.0,
        });
    }
    let [p0, p1, p2, _] = c.profiles(grid);
    let t = s2.t;
    let tr = |w: Trace, j: usize, p: &[f64]| ops::outer(&of.profile(w, 0, j, t, grid), p);
    let eta = |s: &State, a: &Field| {
        let e1 = (ops::dy(&s.u, grid) + &tr(Trace::U, 0, &p2)) / a;
        let e2 = (ops::dy(&s.h, grid) + &tr(Trace::H, 0, &p2)) / a;
        (e1, e2)
    };
    let (e1, e2) = eta(s2, &a2f);
    let du = &s1.u - &s2.u;
    let dh = &s1.h - &s2.h;
    let psitilde = ops::cumtrapz_y(&dh, grid);
    let ubar = &du - &(&e1 * &psitilde);
    let hbar = &dh - &(&e2 * &psitilde);

    let (mu, kappa) = (coeffs.mu, coeffs.kappa);
    let d1 = recover_vg(s1, grid);
    let d2 = recover_vg(s2, grid);
    let ux_phi1 = tr(Trace::U, 1, &p1);
    let hx_phi1 = tr(Trace::H, 1, &p1);
    let ux_phi = tr(Trace::U, 1, &p0);
    let hx_phi = tr(Trace::H, 1, &p0);
    let g2c = &d2.g - &hx_phi;
    let ux2 = ops::dx(&s2.u, grid) + &ux_phi1;
    let hx2 = ops::dx(&s2.h, grid) + &hx_phi1;
    let e1y = ops::dy(&e1, grid);
    let e2y = ops::dy(&e2, grid);

    let a1 = &ux2 + &(&g2c * &e1);
    let b1 = &e1 * &e2 * (kappa - mu) - &(&e1y * (2.0 * mu)) - &hx2 - &(&g2c * &e2);
    let a2 = &hx2 + &(&g2c * &e2);
    let b2 = -(&e2y * (2.0 * kappa)) - &ux2 - &(&g2c * &e1);

    // Transport and tension of solution 1 acting on eta^2.
    let tx = &s1.u + &tr(Trace::U, 0, &p1);
    let ty = &d1.v - &ux_phi;
    let bx = &s1.h + &tr(Trace::H, 0, &p1);
    let by = &d1.g - &hx_phi;
    let apply = |cx: &Field, cy: &Field, f: &Field| cx * &ops::dx(f, grid) + &(cy * &ops::dy(f, grid));
    let (e1t, e2t) = match prev2 {
        Some(p) if p.t < t => {
            let ap = magnetic_total(p, of, c, grid);
            let tp = |w: Trace| ops::outer(&of.profile(w, 0, 0, p.t, grid), &p2);
            let pe1 = (ops::dy(&p.u, grid) + &tp(Trace::U)) / &ap;
            let pe2 = (ops::dy(&p.h, grid) + &tp(Trace::H)) / &ap;
            let dt = t - p.t;
            ((&e1 - &pe1) / dt, (&e2 - &pe2) / dt)
        }
        _ => (ops::zeros(grid), ops::zeros(grid)),
    };
    let c1 = e1t + &apply(&tx, &ty, &e1) - &(ops::dyy(&e1, grid) * mu) - &apply(&bx, &by, &e2)
        - &(&e2 * &e1y * (2.0 * mu))
        + &(&e1 * &(&e2 * &e2 + &e2y) * (kappa - mu))
        + &(&g2c * &(&e1 * &e1 - &(&e2 * &e2)))
        + &(&ux2 * &e1)
        - &(&hx2 * &e2);
    let c2 = e2t + &apply(&tx, &ty, &e2) - &(ops::dyy(&e2, grid) * kappa) - &apply(&bx, &by, &e1)
        - &(&e2 * &e2y * (2.0 * kappa))
        + &(&hx2 * &e1)
        - &(&ux2 * &e2);
    Ok(UniquenessState {
        ubar,
        hbar,
        psitilde,
        a1,
        b1,
        c1,
        a2,
        b2,
        c2,
    })
}

/// One sample of the contraction experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessSample {
    pub t: f64,
    /// `||(ubar, hbar)||_{L^2}`.
    pub n: f64,
    /// Relative mismatch between `psi~` and its representation through `hbar`.
    pub tpsi_residual: f64,
    /// `||psi~ / (1 + y)||` and the bound `2/delta0 sup|h^2 + H phi'| ||hbar||`.
    pub hardy_lhs: f64,
    pub hardy_rhs: f64,
    /// `sup |a_i|`, `sup |b_i|`, `sup |(1 + y) c_i|` over `i = 1, 2`.
    pub sup_a: f64,
    pub sup_b: f64,
    pub sup_c: f64,
}

pub fn uniqueness_sample(
    s1: &State,
    s2: &State,
    prev2: Option<&State>,
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    coeffs: Coefficients,
    delta0: f64,
) -> Result<UniquenessSample> {
    let us = uniqueness_state(s1, s2, prev2, of, c, grid, coeffs)?;
    let a2f = magnetic_total(s2, of, c, grid);
    let rep = &a2f * &ops::cumtrapz_y(&(&us.hbar / &a2f), grid);
    let scale = ops::norm_l2(&us.psitilde, grid);
    let diff = ops::norm_l2(&(&rep - &us.psitilde), grid);
    let tpsi_residual = if scale > 0.0 { diff / scale } else { diff };
    let hardy_lhs = ops::norm_weighted(&us.psitilde, grid, -1.0);
    let hardy_rhs = 2.0 / delta0 * ops::sup_abs(&a2f) * ops::norm_l2(&us.hbar, grid);
    let sup = |fs: [&Field; 2]| fs.iter().map(|f| ops::sup_abs(f)).fold(0.0, f64::max);
    let sup_c = [&us.c1, &us.c2]
        .iter()
        .map(|f| ops::sup_weighted(f, grid, 1.0))
        .fold(0.0, f64::max);
    Ok(UniquenessSample {
        t: s2.t,
        n: (ops::norm_l2(&us.ubar, grid).powi(2) + ops::norm_l2(&us.hbar, grid).powi(2)).sqrt(),
        tpsi_residual,
        hardy_lhs,
        hardy_rhs,
        sup_a: sup([&us.a1, &us.a2]),
        sup_b: sup([&us.b1, &us.b2]),
        sup_c,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub d: f64,
    pub samples: Vec<UniquenessSample>,
    /// `max_t d/dt log N^2` of the smoothed series; `None` when `N` vanishes.
    pub c_hat: Option<f64>,
}

impl UniquenessReport {
    pub fn hardy_holds(&self, slack: f64) -> bool {
        self.samples.iter().all(|s| s.hardy_lhs <= s.hardy_rhs * (1.0 + slack))
    }
}

/// `max d/dt log N^2` over a 5-point moving average of `log N^2`.
pub fn gronwall_constant(t: &[f64], n: &[f64]) -> Option<f64> {
    if n.iter().any(|&v| !(v > 0.0)) || t.len() < 7 {
        return None;
    }
    let logs: Vec<f64> = n.iter().map(|v| 2.0 * v.ln()).collect();
    let len = logs.len();
    let smooth: Vec<f64> = (2..len - 2).map(|i| logs[i - 2..=i + 2].iter().sum::<f64>() / 5.0).collect();
    let ts = &t[2..len - 2];
    (1..smooth.len() - 1)
        .map(|i| (smooth[i + 1] - smooth[i - 1]) / (ts[i + 1] - ts[i - 1]))
        .reduce(f64::max)
}

/// Runs the base solution and one perturbed solution per entry of `ds`
/// (perturbation `d * pert`) with identical fixed steps, sampling every
/// `sample_every` steps.
#[allow(clippy::too_many_arguments)]
pub fn uniqueness_experiment(
    s0: &State,
    pert: &State,
    ds: &[f64],
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    cfg: &SolverConfig,
    sample_every: usize,
) -> Result<Vec<UniquenessReport>> {
    let mut fixed = *cfg;
    fixed.adaptive_dt = false;
    let mut base = PrimalSolver::new(s0.clone(), of.clone(), *c, grid.clone(), fixed)?;
    let mut others = ds
        .iter()
        .map(|&d| {
            let s = State {
                u: &s0.u + &(&pert.u * d),
                h: &s0.h + &(&pert.h * d),
                t: s0.t,
            };
            PrimalSolver::new(s, of.clone(), *c, grid.clone(), fixed)
        })
        .collect::<Result<Vec<_>>>()?;
    let span = fixed.t_end - s0.t;
    let n_steps = ((span / fixed.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = span / n_steps as f64;
    let coeffs = fixed.coefficients();
    let delta0 = fixed.thresholds.delta0;
    let every = sample_every.max(1);
    let mut reports: Vec<UniquenessReport> = ds
        .iter()
        .map(|&d| UniquenessReport {
            d,
            samples: Vec::new(),
            c_hat: None,
        })
        .collect();
    let mut prev_base: Option<State> = None;
    for step in 0..=n_steps {
        if step % every == 0 || step == n_steps {
            let samples = others
                .par_iter()
                .map(|o| uniqueness_sample(o.state(), base.state(), prev_base.as_ref(), of, c, grid, coeffs, delta0))
                .collect::<Result<Vec<_>>>()?;
            for (r, s) in reports.iter_mut().zip(samples) {
                r.samples.push(s);
            }
        }
        if step == n_steps {
            break;
        }
        prev_base = Some(base.state().clone());
        let (rb, ro) = rayon::join(
            || base.step(dt),
            || others.par_iter_mut().map(|o| o.step(dt)).collect::<Result<Vec<_>>>(),
        );
        rb?;
        ro?;
    }
    for r in &mut reports {
        let t: Vec<f64> = r.samples.iter().map(|s| s.t).collect();
        let n: Vec<f64> = r.samples.iter().map(|s| s.n).collect();
        r.c_hat = gronwall_constant(&t, &n);
    }
    Ok(reports)
}
