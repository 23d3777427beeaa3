//! Right-hand side of the homogenized evolution system.
//!
//! With `T = (u + U phi') d_x + (v - U_x phi) d_y` and
//! `B = (h + H phi') d_x + (g - H_x phi) d_y`:
//!
//! ```text
//! u_t = -T u + B h + mu u_yy    - U_x phi' u - U phi'' v + H_x phi' h + H phi'' g + r1
//! h_t = -T h + B u + kappa h_yy - H_x phi' u - H phi'' v + U_x phi' h + U phi'' g + r2
//! ```
//!
//! The solver treats the diffusion implicitly; everything else is evaluated here.

use crate::fields::{recover_vg, DerivedFields, State};
use crate::grid::{Cutoff, Grid2D};
use crate::ops::{self, Field};
use crate::outer::{self, OuterFlow, Trace};
use serde::{Deserialize, Serialize};

/// Viscosity and resistivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub mu: f64,
    pub kappa: f64,
}

/// Trace values on the `x` nodes at one time.
#[derive(Debug, Clone)]
pub struct TraceProfiles {
    pub u: Vec<f64>,
    pub ux: Vec<f64>,
    pub h: Vec<f64>,
    pub hx: Vec<f64>,
}

impl TraceProfiles {
    pub fn new(of: &OuterFlow, t: f64, grid: &Grid2D) -> Self {
        Self {
            u: of.profile(Trace::U, 0, 0, t, grid),
            ux: of.profile(Trace::U, 0, 1, t, grid),
            h: of.profile(Trace::H, 0, 0, t, grid),
            hx: of.profile(Trace::H, 0, 1, t, grid),
        }
    }
}

/// Transport, tension and trace-coupling terms, without diffusion and sources.
pub fn transport(
    s: &State,
    d: &DerivedFields,
    tp: &TraceProfiles,
    phi: &[Vec<f64>; 4],
    grid: &Grid2D,
) -> (Field, Field) {
    let ux = ops::dx(&s.u, grid);
    let uy = ops::dy(&s.u, grid);
    let hx = ops::dx(&s.h, grid);
    let hy = ops::dy(&s.h, grid);
    let (nx, ny) = grid.shape();
    let mut nu = Field::zeros((nx, ny));
    let mut nh = Field::zeros((nx, ny));
    for i in 0..nx {
        let (bu, bux, bh, bhx) = (tp.u[i], tp.ux[i], tp.h[i], tp.hx[i]);
        for j in 0..ny {
            let (p0, p1, p2) = (phi[0][j], phi[1][j], phi[2][j]);
            let (u, h, v, g) = (s.u[[i, j]], s.h[[i, j]], d.v[[i, j]], d.g[[i, j]]);
            let a_u = u + bu * p1;
            let a_v = v - bux * p0;
            let b_h = h + bh * p1;
            let b_g = g - bhx * p0;
            let t_u = a_u * ux[[i, j]] + a_v * uy[[i, j]];
            let t_h = a_u * hx[[i, j]] + a_v * hy[[i, j]];
            let b_hf = b_h * hx[[i, j]] + b_g * hy[[i, j]];
            let b_uf = b_h * ux[[i, j]] + b_g * uy[[i, j]];
            nu[[i, j]] = -t_u + b_hf - bux * p1 * u - bu * p2 * v + bhx * p1 * h + bh * p2 * g;
            nh[[i, j]] = -t_h + b_uf - bhx * p1 * u - bh * p2 * v + bux * p1 * h + bu * p2 * g;
        }
    }
    (nu, nh)
}

/// Full right-hand side `(u_t, h_t)` with discrete diffusion and sources.
pub fn tendency(
    s: &State,
    of: &OuterFlow,
    c: &Cutoff,
    grid: &Grid2D,
    coeffs: Coefficients,
    t: f64,
) -> (Field, Field) {
    let d = recover_vg(s, grid);
    let tp = TraceProfiles::new(of, t, grid);
    let phi = c.profiles(grid);
    let (nu, nh) = transport(s, &d, &tp, &phi, grid);
    let src = outer::source_r(of, c, grid, t, coeffs.mu, coeffs.kappa);
    let ut = nu + &(ops::dyy(&s.u, grid) * coeffs.mu) + &src.r1;
    let ht = nh + &(ops::dyy(&s.h, grid) * coeffs.kappa) + &src.r2;
    (ut, ht)
}
