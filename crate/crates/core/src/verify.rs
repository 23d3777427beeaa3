//! Verification suites over seeded corpora: the weighted inequalities, the
//! discrete identities, the good-unknown equivalence and reconstruction.

use crate::corpus::{rng, FieldDraw, StateDraw};
use crate::error::{Error, Result};
use crate::fields::{recover_vg, StabilityThresholds};
use crate::good_unknowns::{
    bookkeeping_remainders, cancellation_check, equivalence_check, good_unknowns, reconstruct,
    remainders_from_tendency,
};
use crate::grid::{Cutoff, Grid2D};
use crate::inequalities::{
    product_margins, verify_hardy_field, verify_trace, verify_trace0,
    HardyVariant, MarginReport, ProductKind,
};
use crate::mms::{AnalyticState, ManufacturedPair};
use crate::norms::MultiIndex;
use crate::ops::{self, observed_order, Field};
use crate::outer::{OuterFlow, TraceFamily};
use crate::system::Coefficients;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::str::FromStr;

pub const BASE_NX: usize = 64;
pub const BASE_NY: usize = 257;
pub const Y_MAX: f64 = 12.0;

/// Largest relative change of a per-inequality maximal ratio under `x2`
/// refinement.
pub const REFINEMENT_TOL: f64 = 0.05;
/// Required observed order for the discrete identities.
pub const IDENTITY_ORDER: f64 = 1.9;
/// Largest admissible growth of the cancellation residual from `b = 1` to `b = 2`.
pub const CANCELLATION_GROWTH: f64 = 10.0;
/// Round-trip tolerance of the reconstruction at the base grid.
pub const RECONSTRUCTION_TOL: f64 = 1e-3;
/// Below this the round trip is exact up to rounding and has no order.
pub const ROUNDING_LEVEL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Inequalities,
    Identities,
    Equivalence,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inequalities" => Ok(Suite::Inequalities),
            "identities" => Ok(Suite::Identities),
            "equivalence" => Ok(Suite::Equivalence),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidParameter(format!("unknown suite '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Number of random fields in the inequality corpus.
    pub count: usize,
    pub resolution_scale: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 200,
            resolution_scale: 1,
        }
    }
}

/// One aggregated pass/fail decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub margins: Vec<MarginReport>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn extend(&mut self, other: SuiteReport) {
        self.margins.extend(other.margins);
        self.checks.extend(other.checks);
        self.warnings.extend(other.warnings);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn run_suite(which: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    if matches!(which, Suite::Inequalities | Suite::All) {
        report.extend(inequality_suite(opts)?);
    }
    if matches!(which, Suite::Identities | Suite::All) {
        report.extend(identity_suite(opts)?);
    }
    if matches!(which, Suite::Equivalence | Suite::All) {
        report.extend(equivalence_suite(opts)?);
    }
    Ok(report)
}

fn base_grid(scale: usize) -> Result<Grid2D> {
    let s = scale.max(1);
    Grid2D::new(BASE_NX * s, (BASE_NY - 1) * s + 1, Y_MAX)
}

/// Outer flow used by the good-unknown suites.
pub fn suite_outer_flow() -> OuterFlow {
    OuterFlow::from_family(&TraceFamily::SteadyPair {
        u0: 1.0,
        amp: 0.1,
        ratio: 1.2,
    })
}

/// Every inequality variant on one field and its successor.
pub fn field_margins(f: &Field, g: &Field, grid: &Grid2D) -> Result<Vec<MarginReport>> {
    let mut out = vec![verify_trace(f, g, grid)?, verify_trace0(f, grid)?];
    let hardy = [
        (HardyVariant::Normal1, 1.0),
        (HardyVariant::Normal, 0.75),
        (HardyVariant::Normal, 1.5),
        (HardyVariant::NormalSup, 0.5),
        (HardyVariant::NormalSup, 1.0),
        (HardyVariant::Normal2, 0.75),
        (HardyVariant::Normal2, 1.5),
    ];
    for (variant, lambda) in hardy {
        out.push(verify_hardy_field(f, grid, lambda, variant)?);
    }
    for kind in product_kinds() {
        out.extend(product_margins(f, g, grid, kind)?);
    }
    Ok(out)
}

/// The product-bound parameter sets exercised by the suite.
pub fn product_kinds() -> [ProductKind; 3] {
    [
        ProductKind::Morse { l1: 0.5, l2: 0.5 },
        ProductKind::Normal0 { l: 0.0, lambda: 0.75 },
        ProductKind::Normal3 { l: 0.0, lambda: 0.75 },
    ]
}

/// Margins over a corpus of field draws (each paired with the next one).
pub fn corpus_margins(draws: &[FieldDraw], grid: &Grid2D) -> Result<Vec<MarginReport>> {
    let fields: Vec<Field> = draws.iter().map(|d| d.sample(grid)).collect();
    let per: Vec<Vec<MarginReport>> = (0..fields.len())
        .into_par_iter()
        .map(|k| field_margins(&fields[k], &fields[(k + 1) % fields.len()], grid))
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

pub fn corpus_draws(seed: u64, count: usize) -> Vec<FieldDraw> {
    let mut r = rng(seed);
    (0..count).map(|_| FieldDraw::random(&mut r, 3)).collect()
}

/// `id[params-without-indices] -> max ratio / constant`.
fn max_ratios(margins: &[MarginReport]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for m in margins {
        let key = format!("{} {}", m.id, strip_indices(&m.params));
        let v = out.entry(key).or_insert(0.0f64);
        *v = v.max(m.ratio);
    }
    out
}

fn strip_indices(params: &str) -> String {
    params
        .split_whitespace()
        .filter(|p| !p.starts_with("a=") && !p.starts_with("at="))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn inequality_suite(opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    if opts.count == 0 {
        report.warnings.push("empty corpus: inequality suite is vacuous".into());
        return Ok(report);
    }
    let grid = base_grid(opts.resolution_scale)?;
    let fine = grid.refined(2)?;
    let draws = corpus_draws(opts.seed, opts.count);
    let margins = corpus_margins(&draws, &grid)?;
    let fine_margins = corpus_margins(&draws, &fine)?;

    let mut by_id: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for m in &margins {
        let e = by_id.entry(m.id.as_str()).or_insert((0, 0));
        e.0 += 1;
        e.1 += m.pass as usize;
    }
    for (id, (n, ok)) in &by_id {
        report.checks.push(Check::new(
            &format!("inequality {id}"),
            n == ok,
            format!("{ok}/{n} pass"),
        ));
    }
    let coarse = max_ratios(&margins);
    let refined = max_ratios(&fine_margins);
    let mut worst = (String::new(), 0.0f64);
    for (k, rc) in &coarse {
        let rf = refined.get(k).copied().unwrap_or(f64::NAN);
        let change = if *rc > 0.0 { (rf / rc - 1.0).abs() } else { rf.abs() };
        if !(change <= worst.1) {
            worst = (k.clone(), change);
        }
    }
    report.checks.push(Check::new(
        "inequality refinement stability",
        worst.1 <= REFINEMENT_TOL,
        format!("largest relative change {:.3e} ({})", worst.1, worst.0),
    ));
    report.margins = margins;
    Ok(report)
}

fn levels(scale: usize) -> Vec<(usize, usize)> {
    let s = scale.max(1);
    [32usize, 64, 128].iter().map(|&n| (n * s, 4 * n * s + 1)).collect()
}

/// `[1.234e-3, ...]`.
pub fn sci_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn order_check(name: &str, errors: &[f64], required: f64) -> Check {
    let orders: Vec<f64> = errors.windows(2).map(|e| observed_order(e[0], e[1], 2.0)).collect();
    let last = *orders.last().unwrap_or(&f64::NAN);
    Check::new(
        name,
        last >= required,
        format!("errors {}, orders {orders:.3?}", sci_list(errors)),
    )
}

/// Divergence and stream-function residuals of the manufactured pair.
pub fn identity_residuals(grid: &Grid2D) -> (f64, f64) {
    let s = ManufacturedPair::default().state(grid, 0.3);
    let d = recover_vg(&s, grid);
    let div = ops::dx(&s.u, grid) + &ops::dy(&d.v, grid);
    let stream = ops::dy(&d.psi, grid) - &s.h;
    (ops::norm_l2(&div, grid), ops::norm_l2(&stream, grid))
}

/// Remainder levels `(nx, 32 nx + 1)`: the cutoff's third derivative must be
/// resolved for the direct and bookkept remainders to agree.
pub fn remainder_levels(scale: usize) -> Vec<(usize, usize)> {
    let s = scale.max(1);
    [16usize, 32, 64].iter().map(|&n| (n * s, 32 * n * s + 1)).collect()
}

/// `||direct - bookkept||` of `(R1, R2)` for tangential order `b`.
pub fn remainder_mismatch(draw: &StateDraw, nx: usize, ny: usize, b: usize, coeffs: Coefficients) -> Result<f64> {
    let grid = Grid2D::new(nx, ny, Y_MAX)?;
    let (of, c) = (suite_outer_flow(), Cutoff::default());
    let s = draw.state(&grid);
    let beta = MultiIndex::tangential(b);
    let direct = remainders_from_tendency(&s, &of, &c, &grid, beta, coeffs)?;
    let (r1, r2) = bookkeeping_remainders(&s, &of, &c, &grid, beta, coeffs)?;
    Ok(ops::norm_l2(&(&direct.r1 - &r1), &grid).hypot(ops::norm_l2(&(&direct.r2 - &r2), &grid)))
}

pub fn identity_suite(opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    let lv = levels(opts.resolution_scale);
    let mut div = Vec::new();
    let mut stream = Vec::new();
    for &(nx, ny) in &lv {
        let (d, s) = identity_residuals(&Grid2D::new(nx, ny, Y_MAX)?);
        div.push(d);
        stream.push(s);
    }
    report.checks.push(order_check("divergence identity order", &div, IDENTITY_ORDER));
    report.checks.push(order_check("stream identity order", &stream, IDENTITY_ORDER));

    let (of, c) = (suite_outer_flow(), Cutoff::default());
    let draw = StateDraw::random(&mut rng(opts.seed));
    let mut canc: [Vec<f64>; 2] = Default::default();
    for &(nx, ny) in &lv {
        let grid = Grid2D::new(nx, ny, Y_MAX)?;
        let s = draw.state(&grid);
        for b in 1..=2 {
            canc[b - 1].push(cancellation_check(&s, &of, &c, &grid, MultiIndex::tangential(b))?.residual());
        }
    }
    for b in 1..=2 {
        report.checks.push(order_check(
            &format!("cancellation order b={b}"),
            &canc[b - 1],
            IDENTITY_ORDER,
        ));
    }
    let growth = canc[1][1] / canc[0][1];
    report.checks.push(Check::new(
        "cancellation growth b=1 to b=2",
        growth <= CANCELLATION_GROWTH,
        format!("ratio {growth:.3} at {}x{}", lv[1].0, lv[1].1),
    ));

    let coeffs = Coefficients { mu: 1.0, kappa: 0.5 };
    for b in 1..=2 {
        let errs = remainder_levels(opts.resolution_scale)
            .par_iter()
            .map(|&(nx, ny)| remainder_mismatch(&draw, nx, ny, b, coeffs))
            .collect::<Result<Vec<_>>>()?;
        report.checks.push(order_check(
            &format!("remainder consistency order b={b}"),
            &errs,
            IDENTITY_ORDER,
        ));
    }
    Ok(report)
}

/// Relative round-trip error of [`reconstruct`] for tangential order `b`.
pub fn reconstruction_error(draw: &StateDraw, grid: &Grid2D, b: usize) -> Result<f64> {
    let (of, c) = (suite_outer_flow(), Cutoff::default());
    let th = StabilityThresholds::default();
    let s = draw.state(grid);
    let gu = good_unknowns(&s, &of, &c, &th, grid, MultiIndex::tangential(b))?;
    let (ru, rh) = reconstruct(&gu, &s, &of, &c, grid)?;
    let du = ops::dx_pow(&s.u, grid, b);
    let dh = ops::dx_pow(&s.h, grid, b);
    let err = ops::norm_l2(&(&ru - &du), grid).hypot(ops::norm_l2(&(&rh - &dh), grid));
    Ok(err / ops::norm_l2(&du, grid).hypot(ops::norm_l2(&dh, grid)))
}

/// Number of states in the equivalence corpus.
pub fn equivalence_count(count: usize) -> usize {
    (count / 10).max(1)
}

pub fn equivalence_suite(opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    let grid = base_grid(opts.resolution_scale)?;
    let (of, c) = (suite_outer_flow(), Cutoff::default());
    let th = StabilityThresholds::default();
    let mut r = rng(opts.seed.wrapping_add(1));
    let draws: Vec<StateDraw> = (0..equivalence_count(opts.count))
        .map(|_| StateDraw::random(&mut r))
        .collect();
    let results = draws
        .par_iter()
        .map(|d| {
            let s = d.state(&grid);
            let mut v = Vec::new();
            for b in 1..=3 {
                for l in [0.0, 1.0] {
                    v.push(equivalence_check(&s, &of, &c, &th, &grid, MultiIndex::tangential(b), l)?);
                }
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<_> = results.into_iter().flatten().collect();
    for e in &all {
        report.margins.push(MarginReport::new(
            "equivalence",
            format!("b={} l={}", e.b, e.l),
            e.ratio,
            1.0,
            e.upper,
            1.0,
            &grid,
        ));
    }
    let ok = all.iter().filter(|e| e.pass).count();
    let (lo, hi) = all
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), e| (a.min(e.ratio), b.max(e.ratio)));
    report.checks.push(Check::new(
        "equivalence ratios",
        ok == all.len(),
        format!("{ok}/{} inside [M^-1 (1 - 0.05), M (1 + 0.05)]; ratios in [{lo:.3}, {hi:.3}]", all.len()),
    ));
    let dy_ok = all.iter().filter(|e| e.dy_pass).count();
    report.checks.push(Check::new(
        "equivalence normal derivative",
        dy_ok == all.len(),
        format!("{dy_ok}/{} pass", all.len()),
    ));

    let draw = &draws[0];
    let base = reconstruction_error(draw, &grid, 1)?;
    report.checks.push(Check::new(
        "reconstruction round trip",
        base <= RECONSTRUCTION_TOL,
        format!("relative error {base:.3e} at {}x{}", grid.nx, grid.ny),
    ));
    let s = opts.resolution_scale.max(1);
    let errs = [(32, 129), (64, 257), (128, 513)]
        .iter()
        .map(|&(nx, ny)| reconstruction_error(draw, &Grid2D::new(nx * s, (ny - 1) * s + 1, Y_MAX)?, 1))
        .collect::<Result<Vec<_>>>()?;
    let mut chk = order_check("reconstruction order", &errs, IDENTITY_ORDER);
    if errs.iter().all(|&e| e <= ROUNDING_LEVEL) {
        chk.pass = true;
        chk.detail = format!("exact up to rounding: errors {}", sci_list(&errs));
    }
    report.checks.push(chk);
    Ok(report)
}

/// Largest product-bound ratio per kind on a corpus, before any safety factor.
pub fn calibrate_products(seed: u64, count: usize, grid: &Grid2D) -> Result<Vec<(ProductKind, f64)>> {
    let fields: Vec<Field> = corpus_draws(seed, count).iter().map(|d| d.sample(grid)).collect();
    product_kinds()
        .into_iter()
        .map(|kind| {
            let worst = (0..fields.len())
                .into_par_iter()
                .map(|k| {
                    let (f, g) = (&fields[k], &fields[(k + 1) % fields.len()]);
                    product_margins(f, g, grid, kind)
                        .map(|ms| ms.iter().fold(0.0f64, |acc, m| acc.max(m.ratio)))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0f64, f64::max);
            Ok((kind, worst))
        })
        .collect()
}
