//! Numerical verifiers for the trace, Hardy-type and product inequalities on
//! weighted spaces.
//!
//! Each verifier returns a [`MarginReport`]: the left side, the right side
//! without its constant, the constant, and a pass flag that allows a relative
//! slack of `5 dy` (or `5 (dx + dy)` for the product bounds) for quadrature error.

use crate::constants;
use crate::error::{Error, Result};
use crate::grid::{weight, Grid2D};
use crate::norms::{hnorm, spatial_derivative, MultiIndex};
use crate::ops::{self, Field};
use serde::{Deserialize, Serialize};

/// Outcome of one inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub id: String,
    pub params: String,
    pub lhs: f64,
    /// Right-hand side without its constant.
    pub rhs_base: f64,
    pub constant: f64,
    /// `lhs / rhs_base` (0 when both vanish).
    pub ratio: f64,
    /// Largest admissible ratio: `constant * slack`.
    pub bound: f64,
    pub nx: usize,
    pub ny: usize,
    pub pass: bool,
}

impl MarginReport {
    pub fn new(
        id: &str,
        params: String,
        lhs: f64,
        rhs_base: f64,
        constant: f64,
        slack: f64,
        grid: &Grid2D,
    ) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs_base };
        let bound = constant * slack;
        Self {
            id: id.to_string(),
            params,
            lhs,
            rhs_base,
            constant,
            ratio,
            bound,
            nx: grid.nx,
            ny: grid.ny,
            pass: ratio.is_finite() && ratio <= bound,
        }
    }

    /// Right-hand side including its constant.
    pub fn rhs(&self) -> f64 {
        self.constant * self.rhs_base
    }

    pub const CSV_HEADER: &'static str = "id,params,lhs,rhs,ratio,bound,nx,ny,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{}",
            self.id,
            self.params,
            self.lhs,
            self.rhs(),
            self.ratio,
            self.bound,
            self.nx,
            self.ny,
            self.pass
        )
    }
}

fn y_slack(grid: &Grid2D) -> f64 {
    1.0 + 5.0 * grid.dy
}

fn check_decay(f: &Field, g: &Field, grid: &Grid2D) -> Result<()> {
    let top = grid.ny - 1;
    let scale = f
        .iter()
        .zip(g.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a * b).abs()))
        .max(1.0);
    let tail = f
        .column(top)
        .iter()
        .zip(g.column(top).iter())
        .fold(0.0f64, |m, (a, b)| m.max((a * b).abs()));
    if tail > 1e-6 * scale {
        return Err(Error::Decay { value: tail });
    }
    Ok(())
}

/// `|int_T (f g)(x, 0) dx| <= ||f_y|| ||g|| + ||f|| ||g_y||`.
pub fn verify_trace(f: &Field, g: &Field, grid: &Grid2D) -> Result<MarginReport> {
    check_decay(f, g, grid)?;
    let lhs = (grid.dx * f.column(0).iter().zip(g.column(0).iter()).map(|(a, b)| a * b).sum::<f64>()).abs();
    let n = |h: &Field| ops::norm_l2(h, grid);
    let rhs = n(&ops::dy(f, grid)) * n(g) + n(f) * n(&ops::dy(g, grid));
    Ok(MarginReport::new("trace", String::new(), lhs, rhs, 1.0, y_slack(grid), grid))
}

/// `||f(., 0)||_{L^2(T)} <= sqrt(2) ||f||^{1/2} ||f_y||^{1/2}`.
pub fn verify_trace0(f: &Field, grid: &Grid2D) -> Result<MarginReport> {
    check_decay(f, f, grid)?;
    let wall: Vec<f64> = f.column(0).to_vec();
    let lhs = ops::norm_x(&wall, grid.dx);
    let rhs = (ops::norm_l2(f, grid) * ops::norm_l2(&ops::dy(f, grid), grid)).sqrt();
    Ok(MarginReport::new(
        "trace0",
        String::new(),
        lhs,
        rhs,
        std::f64::consts::SQRT_2,
        y_slack(grid),
        grid,
    ))
}

/// The Hardy-type bounds for `d_y^-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HardyVariant {
    /// `||<y>^{-lam} d_y^-1 f|| <= 2/(2 lam - 1) ||<y>^{1-lam} f||`, `lam > 1/2`.
    Normal,
    /// The `lam = 1` case with constant 2.
    Normal1,
    /// `||<y>^{-lam} d_y^-1 f||_inf <= (1/lam) ||<y>^{1-lam} f||_inf`, `lam > 0`.
    NormalSup,
    /// `||d_y^-1 f||_inf <= (2 lam - 1)^{-1/2} ||<y>^lam f||`, `lam > 1/2`.
    Normal2,
}

impl HardyVariant {
    pub fn id(&self) -> &'static str {
        match self {
            HardyVariant::Normal => "normal",
            HardyVariant::Normal1 => "normal1",
            HardyVariant::NormalSup => "normal-sup",
            HardyVariant::Normal2 => "normal2",
        }
    }
}

/// Hardy-type check on a single `y`-profile sampled on the grid's `y` nodes.
pub fn verify_hardy(
    f: &[f64],
    grid: &Grid2D,
    lambda: f64,
    variant: HardyVariant,
) -> Result<MarginReport> {
    hardy_columns(&[f], 1.0, grid, lambda, variant)
}

/// Hardy-type check applied column-wise to a 2D field (norms over `Omega`).
pub fn verify_hardy_field(
    f: &Field,
    grid: &Grid2D,
    lambda: f64,
    variant: HardyVariant,
) -> Result<MarginReport> {
    let cols: Vec<&[f64]> = f
        .rows()
        .into_iter()
        .map(|c| c.to_slice().expect("standard layout"))
        .collect();
    hardy_columns(&cols, grid.dx, grid, lambda, variant)
}

fn hardy_columns(
    cols: &[&[f64]],
    x_measure: f64,
    grid: &Grid2D,
    lambda: f64,
    variant: HardyVariant,
) -> Result<MarginReport> {
    let lambda = if variant == HardyVariant::Normal1 { 1.0 } else { lambda };
    let needs_half = matches!(
        variant,
        HardyVariant::Normal | HardyVariant::Normal1 | HardyVariant::Normal2
    );
    if needs_half && lambda <= 0.5 {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must exceed 1/2"
        )));
    }
    if variant == HardyVariant::NormalSup && lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    let ny = grid.ny;
    let w = |p: f64| -> Vec<f64> { grid.y_nodes.iter().map(|&y| weight(y, p)).collect() };
    let mut prim = vec![0.0; ny];
    let mut lhs_acc = 0.0f64;
    let mut rhs_acc = 0.0f64;
    let weighted_sq = |v: &[f64], wt: &[f64]| -> f64 {
        let s: Vec<f64> = v.iter().zip(wt).map(|(a, b)| (a * b).powi(2)).collect();
        ops::trapz_1d(&s, grid.dy)
    };
    let sup = |v: &[f64], wt: &[f64]| -> f64 {
        v.iter().zip(wt).fold(0.0f64, |m, (a, b)| m.max((a * b).abs()))
    };
    let (constant, id) = match variant {
        HardyVariant::Normal | HardyVariant::Normal1 => (2.0 / (2.0 * lambda - 1.0), variant.id()),
        HardyVariant::NormalSup => (1.0 / lambda, variant.id()),
        HardyVariant::Normal2 => ((2.0 * lambda - 1.0).powf(-0.5), variant.id()),
    };
    let (wl, wr) = match variant {
        HardyVariant::Normal | HardyVariant::Normal1 | HardyVariant::NormalSup => {
            (w(-lambda), w(1.0 - lambda))
        }
        HardyVariant::Normal2 => (vec![1.0; ny], w(lambda)),
    };
    for col in cols {
        ops::cumtrapz_1d(col, grid.dy, &mut prim);
        match variant {
            HardyVariant::Normal | HardyVariant::Normal1 => {
                lhs_acc += x_measure * weighted_sq(&prim, &wl);
                rhs_acc += x_measure * weighted_sq(col, &wr);
            }
            HardyVariant::NormalSup => {
                lhs_acc = lhs_acc.max(sup(&prim, &wl));
                rhs_acc = rhs_acc.max(sup(col, &wr));
            }
            HardyVariant::Normal2 => {
                lhs_acc = lhs_acc.max(sup(&prim, &wl));
                rhs_acc = rhs_acc.max(weighted_sq(col, &wr).sqrt());
            }
        }
    }
    let (lhs, rhs) = match variant {
        HardyVariant::Normal | HardyVariant::Normal1 => (lhs_acc.sqrt(), rhs_acc.sqrt()),
        _ => (lhs_acc, rhs_acc),
    };
    Ok(MarginReport::new(
        id,
        format!("lambda={lambda}"),
        lhs,
        rhs,
        constant,
        y_slack(grid),
        grid,
    ))
}

/// The three product bounds with an unquantified constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProductKind {
    /// `||D^a f D^at g||_{L^2_{l1+l2+k+k~}} <= C ||f||_{H^m_{l1}} ||g||_{H^m_{l2}}`.
    Morse { l1: f64, l2: f64 },
    /// `||D^a g d_x^bx~ d_y^-1 h||_{L^2_{l+k}} <= C ||g||_{H^m_{l+lam}} ||h||_{H^m_{1-lam}}`.
    Normal0 { l: f64, lambda: f64 },
    /// `||D^a f d_x^bx~ d_y^-1 g||_{L^2_{l+k}} <= C ||f||_{H^m_l} ||g||_{H^m_lam}`.
    Normal3 { l: f64, lambda: f64 },
}

impl ProductKind {
    pub fn id(&self) -> &'static str {
        match self {
            ProductKind::Morse { .. } => "morse",
            ProductKind::Normal0 { .. } => "normal0",
            ProductKind::Normal3 { .. } => "normal3",
        }
    }

    /// The frozen calibrated constant for this bound.
    pub fn frozen_constant(&self) -> f64 {
        match self {
            ProductKind::Morse { .. } => constants::C_MORSE,
            ProductKind::Normal0 { .. } => constants::C_NORMAL0,
            ProductKind::Normal3 { .. } => constants::C_NORMAL3,
        }
    }
}

/// Order `m` of the Sobolev norms on the right of the product bounds.
pub const PRODUCT_ORDER: usize = 3;

/// Left side and constant-free right side of a product bound.
pub fn product_sides(
    f: &Field,
    g: &Field,
    grid: &Grid2D,
    a: MultiIndex,
    at: MultiIndex,
    kind: ProductKind,
) -> Result<(f64, f64)> {
    let m = PRODUCT_ORDER;
    if a.bt != 0 || at.bt != 0 {
        return Err(Error::InvalidParameter("product bounds take spatial indices only".into()));
    }
    if a.order() + at.order() > m {
        return Err(Error::IndexBudget {
            requested: a.order() + at.order(),
            max: m,
        });
    }
    match kind {
        ProductKind::Morse { l1, l2 } => {
            let p = spatial_derivative(f, grid, a) * spatial_derivative(g, grid, at);
            let lhs = ops::norm_weighted(&p, grid, l1 + l2 + (a.k + at.k) as f64);
            Ok((lhs, hnorm(f, grid, l1, m) * hnorm(g, grid, l2, m)))
        }
        ProductKind::Normal0 { l, lambda } | ProductKind::Normal3 { l, lambda } => {
            if at.k != 0 {
                return Err(Error::InvalidParameter(
                    "the integrated factor takes a tangential index".into(),
                ));
            }
            let prim = ops::cumtrapz_y(&ops::dx_pow(g, grid, at.bx), grid);
            let p = spatial_derivative(f, grid, a) * prim;
            let lhs = ops::norm_weighted(&p, grid, l + a.k as f64);
            let rhs = match kind {
                ProductKind::Normal0 { .. } => {
                    hnorm(f, grid, l + lambda, m) * hnorm(g, grid, 1.0 - lambda, m)
                }
                _ => hnorm(f, grid, l, m) * hnorm(g, grid, lambda, m),
            };
            Ok((lhs, rhs))
        }
    }
}

/// Product bound with a given constant; slack `1 + 5 (dx + dy)`.
pub fn verify_product_with(
    f: &Field,
    g: &Field,
    grid: &Grid2D,
    a: MultiIndex,
    at: MultiIndex,
    kind: ProductKind,
    constant: f64,
) -> Result<MarginReport> {
    let (lhs, rhs) = product_sides(f, g, grid, a, at, kind)?;
    let params = match kind {
        ProductKind::Morse { l1, l2 } => format!("a={a} at={at} l1={l1} l2={l2}"),
        ProductKind::Normal0 { l, lambda } | ProductKind::Normal3 { l, lambda } => {
            format!("a={a} at={at} l={l} lambda={lambda}")
        }
    };
    Ok(MarginReport::new(
        kind.id(),
        params,
        lhs,
        rhs,
        constant,
        1.0 + 5.0 * (grid.dx + grid.dy),
        grid,
    ))
}

/// Product bound with the frozen calibrated constant.
pub fn verify_product(
    f: &Field,
    g: &Field,
    grid: &Grid2D,
    a: MultiIndex,
    at: MultiIndex,
    kind: ProductKind,
) -> Result<MarginReport> {
    verify_product_with(f, g, grid, a, at, kind, kind.frozen_constant())
}

/// Spatial derivatives of one field up to [`PRODUCT_ORDER`], computed once.
struct Derivatives<'a> {
    grid: &'a Grid2D,
    d: Vec<(MultiIndex, Field)>,
}

impl<'a> Derivatives<'a> {
    fn new(f: &Field, grid: &'a Grid2D) -> Self {
        let d = MultiIndex::spatial_up_to(PRODUCT_ORDER)
            .into_iter()
            .map(|a| (a, spatial_derivative(f, grid, a)))
            .collect();
        Self { grid, d }
    }

    fn get(&self, a: MultiIndex) -> &Field {
        &self.d.iter().find(|(b, _)| *b == a).expect("index within budget").1
    }

    fn hnorm(&self, l: f64) -> f64 {
        self.d
            .iter()
            .map(|(a, f)| ops::norm_weighted_sq(f, self.grid, l + a.k as f64))
            .sum::<f64>()
            .sqrt()
    }
}

/// Every index pair of one product bound for the pair `(f, g)`; equivalent to
/// calling [`verify_product`] on each of [`product_index_pairs`].
pub fn product_margins(f: &Field, g: &Field, grid: &Grid2D, kind: ProductKind) -> Result<Vec<MarginReport>> {
    let (df, dg) = (Derivatives::new(f, grid), Derivatives::new(g, grid));
    let rhs = match kind {
        ProductKind::Morse { l1, l2 } => df.hnorm(l1) * dg.hnorm(l2),
        ProductKind::Normal0 { l, lambda } => df.hnorm(l + lambda) * dg.hnorm(1.0 - lambda),
        ProductKind::Normal3 { l, lambda } => df.hnorm(l) * dg.hnorm(lambda),
    };
    let slack = 1.0 + 5.0 * (grid.dx + grid.dy);
    let mut prims: Vec<(usize, Field)> = Vec::new();
    let mut out = Vec::new();
    for (a, at) in product_index_pairs(kind) {
        let (lhs, params) = match kind {
            ProductKind::Morse { l1, l2 } => {
                let p = df.get(a) * dg.get(at);
                (
                    ops::norm_weighted(&p, grid, l1 + l2 + (a.k + at.k) as f64),
                    format!("a={a} at={at} l1={l1} l2={l2}"),
                )
            }
            ProductKind::Normal0 { l, lambda } | ProductKind::Normal3 { l, lambda } => {
                if !prims.iter().any(|(b, _)| *b == at.bx) {
                    prims.push((at.bx, ops::cumtrapz_y(dg.get(at), grid)));
                }
                let prim = &prims.iter().find(|(b, _)| *b == at.bx).expect("cached").1;
                let p = df.get(a) * prim;
                (
                    ops::norm_weighted(&p, grid, l + a.k as f64),
                    format!("a={a} at={at} l={l} lambda={lambda}"),
                )
            }
        };
        out.push(MarginReport::new(kind.id(), params, lhs, rhs, kind.frozen_constant(), slack, grid));
    }
    Ok(out)
}

/// All index pairs `(a, at)` with `|a| + |at| <= PRODUCT_ORDER`; for the
/// integrated-factor bounds `at` is tangential.
pub fn product_index_pairs(kind: ProductKind) -> Vec<(MultiIndex, MultiIndex)> {
    let mut out = Vec::new();
    for a in MultiIndex::spatial_up_to(PRODUCT_ORDER) {
        for at in MultiIndex::spatial_up_to(PRODUCT_ORDER - a.order()) {
            if !matches!(kind, ProductKind::Morse { .. }) && at.k != 0 {
                continue;
            }
            out.push((a, at));
        }
    }
    out
}
