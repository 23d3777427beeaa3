//! Hand-checkable cases with closed-form or independently computed answers.

use approx::assert_relative_eq;
use mhdbl::corpus::{rng, StateDraw};
use mhdbl::fields::{recover_vg, to_physical, validate_initial, StabilityThresholds, State};
use mhdbl::good_unknowns::{equivalence_check, eta_fields, good_unknowns};
use mhdbl::grid::{Cutoff, Grid2D};
use mhdbl::inequalities::{verify_hardy, verify_product, HardyVariant, ProductKind};
use mhdbl::norms::{hnorm, MultiIndex};
use mhdbl::ops;
use mhdbl::outer::{epsilon_corrector, matching_residual, outer_norm_m0, source_r, Mode, OuterFlow, Series, TraceFamily};
use mhdbl::solver::crocco::eta_grid;
use mhdbl::solver::{cfl_dt, to_crocco, CroccoSolver, CroccoState, Scheme, SolverConfig};
use mhdbl::system::Coefficients;
use proptest::prelude::*;
use std::f64::consts::PI;

fn grid(nx: usize, ny: usize) -> Grid2D {
    Grid2D::new(nx, ny, 12.0).unwrap()
}

fn series(modes: &[Mode]) -> Series {
    Series(modes.to_vec())
}

/// `U = 1 + 0.1 cos x`, `H = 1`, `P = -U^2 / 2` so that `P_x = H H_x - U U_x`.
fn steady_wavy() -> OuterFlow {
    OuterFlow::from_series(
        series(&[Mode::constant(1.0), Mode::cos(0.1, 0.0, 1.0)]),
        series(&[Mode::constant(1.0)]),
        series(&[Mode::constant(-0.5025), Mode::cos(-0.1, 0.0, 1.0), Mode::cos(-0.0025, 0.0, 2.0)]),
    )
}

#[test]
fn cutoff_is_the_integral_of_its_slope() {
    let c = Cutoff::default();
    let n = 20_000;
    let h = 0.5 / n as f64;
    // phi(1) = 0, so phi(1.5) is the integral of phi' over [1, 1.5]
    let integral: f64 = (0..n)
        .map(|k| {
            let y = 1.0 + k as f64 * h;
            0.5 * h * (c.eval(y, 1) + c.eval(y + h, 1))
        })
        .sum();
    let v = c.eval(1.5, 0);
    assert!(v > 0.0 && v < 1.5);
    assert_relative_eq!(v, integral, max_relative = 1e-7);
    let mut last = 0.0;
    for k in 1..100 {
        let y = 1.0 + k as f64 / 100.0;
        assert!(c.eval(y, 0) > last);
        last = c.eval(y, 0);
    }
}

#[test]
fn burgers_trace_satisfies_matching_to_rounding() {
    let g = grid(64, 33);
    let of = OuterFlow::from_family(&TraceFamily::Burgers { amp: 1.0 });
    for t in [0.0, 0.4, 2.0] {
        let (r1, r2) = matching_residual(&of, t, &g);
        assert!(r1.iter().chain(&r2).all(|v| v.abs() <= 1e-12));
    }
    let (r1, _) = matching_residual(&steady_wavy(), 0.0, &g);
    assert!(r1.iter().all(|v| v.abs() <= 1e-12));
}

#[test]
fn sources_match_a_divided_difference_evaluation() {
    // grid node j = 12 sits at y = 1.5
    let g = grid(16, 97);
    let (c, of) = (Cutoff::default(), steady_wavy());
    let (mu, kappa) = (0.8, 1.3);
    let src = source_r(&of, &c, &g, 0.0, mu, kappa);
    let (y, e) = (1.5, 1e-3);
    let p = |s: f64| c.eval(y + s * e, 0);
    let d1 = (p(1.0) - p(-1.0)) / (2.0 * e);
    let d2 = (p(1.0) - 2.0 * p(0.0) + p(-1.0)) / (e * e);
    let d3 = (p(2.0) - 2.0 * p(1.0) + 2.0 * p(-1.0) - p(-2.0)) / (2.0 * e.powi(3));
    for i in 0..g.nx {
        let x = g.x_nodes[i];
        let u = 1.0 + 0.1 * x.cos();
        let px = 0.1 * x.sin() * u;
        let r1 = px * (d1 * d1 - p(0.0) * d2 - 1.0) + mu * u * d3;
        assert!((src.r1[[i, 12]] - r1).abs() < 1e-4 * (1.0 + r1.abs()));
        assert!((src.r2[[i, 12]] - kappa * d3).abs() < 1e-4 * (1.0 + d3.abs()));
        assert!((src.r3[[i, 12]] - kappa * d2).abs() < 1e-4 * (1.0 + d2.abs()));
    }
}

#[test]
fn corrector_of_a_single_mode_is_the_mode_itself() {
    // u0 = sin(x) y e^{-y}: -d_x^2 u0 = u0, up to the central-difference symbol
    let err = |nx: usize| {
        let g = grid(nx, 97);
        let s = State {
            u: ops::sample(&g, |x, y| x.sin() * y * (-y).exp()),
            h: ops::zeros(&g),
            t: 0.0,
        };
        let k = epsilon_corrector(&s, &OuterFlow::zero(), &Cutoff::default(), &g, Coefficients { mu: 1.0, kappa: 1.0 }, 0, 0.7).unwrap();
        assert_eq!(ops::sup_abs(&k.r2), 0.0);
        ops::sup_abs(&(&k.r1 - &s.u))
    };
    let (a, b) = (err(32), err(64));
    assert!(a < (2.0 * PI / 32.0).powi(2) / 12.0 * 0.5);
    assert!(ops::observed_order(a, b, 2.0) > 1.9);
}

#[test]
fn outer_norm_of_simple_traces() {
    let g = grid(64, 33);
    let ones = OuterFlow::from_family(&TraceFamily::Constant { u: 1.0, h: 1.0 });
    assert_relative_eq!(outer_norm_m0(&ones, 2, &[0.0, 1.0], &g), 2.0 * (2.0 * PI).sqrt(), max_relative = 1e-12);
    let wavy = OuterFlow::from_series(series(&[Mode::cos(0.1, 0.0, 1.0)]), series(&[Mode::constant(1.0)]), Series::default());
    // ||0.1 cos|| + ||0.1 sin|| + ||1||
    let want = 0.2 * PI.sqrt() + (2.0 * PI).sqrt();
    assert_relative_eq!(outer_norm_m0(&wavy, 1, &[0.0], &g), want, max_relative = 1e-12);
    assert_eq!(outer_norm_m0(&OuterFlow::zero(), 3, &[0.0], &g), 0.0);
}

#[test]
fn stream_function_of_a_decaying_field_converges_at_second_order() {
    let err = |ny: usize| {
        let g = grid(16, ny);
        let s = State {
            u: ops::zeros(&g),
            h: ops::sample(&g, |x, y| (1.0 + 0.3 * x.sin()) * (-y).exp()),
            t: 0.0,
        };
        let d = recover_vg(&s, &g);
        let exact = ops::sample(&g, |x, y| (1.0 + 0.3 * x.sin()) * (1.0 - (-y).exp()));
        ops::sup_abs(&(&d.psi - &exact))
    };
    let (a, b) = (err(97), err(193));
    assert!(ops::observed_order(a, b, 2.0) > 1.9, "{a:e} -> {b:e}");
}

#[test]
fn normal_physical_velocity_picks_up_the_trace_slope() {
    let g = grid(16, 97);
    let s = StateDraw::random(&mut rng(6)).state(&g);
    let ps = to_physical(&s, &steady_wavy(), &Cutoff::default(), &g);
    let v = recover_vg(&s, &g).v;
    // x = pi/2 is node 4; above 2 R0 the cutoff is phi = y
    for j in (g.ny / 4)..g.ny {
        let y = g.y_nodes[j];
        assert!((ps.u2[[4, j]] - (v[[4, j]] + 0.1 * y)).abs() < 1e-12);
    }
}

#[test]
fn validation_minimum_agrees_with_dense_sampling() {
    let g = grid(16, 385);
    let c = Cutoff::default();
    let of = OuterFlow::from_family(&TraceFamily::Constant { u: 1.0, h: 1.0 });
    let s = State {
        u: ops::zeros(&g),
        h: ops::sample(&g, |_, y| (-y).exp()),
        t: 0.0,
    };
    let r = validate_initial(&s, &of, &c, &StabilityThresholds::default(), &g);
    let n = 10 * (g.ny - 1);
    let ys = (0..=n).map(|k| g.y_max * k as f64 / n as f64);
    let dense = ys.clone().map(|y| (-y).exp() + c.eval(y, 1)).fold(f64::INFINITY, f64::min);
    let curvature = ys.map(|y| ((-y).exp() + c.eval(y, 3)).abs()).fold(0.0, f64::max);
    // a node lies within dy / 2 of the true minimiser
    let gap = r.h1_min - dense;
    assert!(gap >= -1e-12 && gap <= curvature * g.dy * g.dy / 8.0, "{} vs {dense}", r.h1_min);
    assert_eq!(r.positivity_ok, dense >= 0.2);
}

#[test]
fn weighted_norms_of_an_exponential() {
    let g = grid(16, 257);
    let f = ops::sample(&g, |_, y| (-y).exp());
    // the trapezoid sum of e^{-2y} on the grid is a geometric series
    let (dy, n) = (g.dy, (g.ny - 1) as i32);
    let r = (-2.0 * dy).exp();
    let trapz = dy * ((1.0 - r.powi(n + 1)) / (1.0 - r) - 0.5 * (1.0 + r.powi(n)));
    let q = hnorm(&f, &g, 0.0, 0).powi(2);
    assert_relative_eq!(q, 2.0 * PI * trapz, max_relative = 1e-12);
    // leading trapezoid error dy^2 / 12 * [f']_0^inf with f = e^{-2y}
    assert!((q - PI).abs() <= 2.0 * PI * dy * dy / 6.0 * 1.01);
    // (1 + y)^2 e^{-2y} has zero slope at the wall, so the trapezoid rule is far more accurate
    let q1 = hnorm(&f, &g, 1.0, 0).powi(2);
    assert!((q1 - 2.5 * PI).abs() < 1e-4, "{q1}");
}

#[test]
fn hardy_bound_on_an_exponential_and_a_narrow_bump() {
    let g = grid(8, 2401);
    let e: Vec<f64> = g.y_nodes.iter().map(|y| (-y).exp()).collect();
    let r = verify_hardy(&e, &g, 1.0, HardyVariant::Normal1).unwrap();
    // ||(1 - e^{-y}) / (1 + y)|| against 2 ||e^{-y}|| on the half line
    assert!(r.pass);
    assert!(r.ratio > 0.3 && r.ratio < 2.0, "{}", r.ratio);
    let s = 0.1;
    let bump: Vec<f64> = g.y_nodes.iter().map(|y| 2.0 * y / (s * s) * (-(y / s).powi(2)).exp()).collect();
    // trapezoid error dy^2 / 12 * f'(0) with f'(0) = 2 / s^2
    let mass = ops::trapz_1d(&bump, g.dy);
    assert!((mass - 1.0).abs() <= g.dy * g.dy / 12.0 * 2.0 / (s * s) * 1.01);
    let r = verify_hardy(&bump, &g, 1.0, HardyVariant::Normal1).unwrap();
    assert!(r.pass && r.ratio < 2.0);
}

#[test]
fn product_bound_on_an_exponential_pair() {
    let g = grid(16, 1201);
    let f = ops::sample(&g, |_, y| (-y).exp());
    let r = verify_product(&f, &f, &g, MultiIndex::default(), MultiIndex::default(), ProductKind::Morse { l1: 0.0, l2: 0.0 }).unwrap();
    assert_relative_eq!(r.lhs, (PI / 2.0).sqrt(), max_relative = 1e-4);
    // 2 pi sum_k int (1 + y)^{2k} e^{-2y} for k = 0..3
    let moments = [0.5, 1.25, 5.25, 41.375];
    let norm_sq = 2.0 * PI * moments.iter().sum::<f64>();
    assert_relative_eq!(r.rhs_base, norm_sq, max_relative = 1e-3);
    assert!(r.pass);
}

#[test]
fn eta1_matches_its_closed_form() {
    let of = OuterFlow::zero();
    let err = |ny: usize| {
        let g = grid(16, ny);
        let s = State {
            u: ops::sample(&g, |x, y| y * (-y).exp() * (1.0 + 0.1 * x.sin())),
            h: ops::sample(&g, |_, _| 1.0),
            t: 0.0,
        };
        let eta = eta_fields(&s, &of, &Cutoff::default(), &StabilityThresholds::default(), &g).unwrap();
        assert_eq!(ops::sup_abs(&eta.eta2), 0.0);
        let want = ops::sample(&g, |x, y| (1.0 - y) * (-y).exp() * (1.0 + 0.1 * x.sin()));
        ops::sup_abs(&(&eta.eta1 - &want))
    };
    let (a, b) = (err(97), err(193));
    assert!(ops::observed_order(a, b, 2.0) > 1.9, "{a:e} -> {b:e}");
}

#[test]
fn good_unknowns_agree_with_the_closed_form_stream_function() {
    let of = OuterFlow::from_family(&TraceFamily::Constant { u: 1.0, h: 1.0 });
    let c = Cutoff::default();
    let th = StabilityThresholds::default();
    let err = |ny: usize| {
        let g = grid(32, ny);
        let s = State {
            u: ops::sample(&g, |x, y| x.sin() * y * (-y).exp()),
            h: ops::sample(&g, |x, y| (1.0 + 0.3 * x.sin()) * (-y).exp() + 0.5),
            t: 0.0,
        };
        let gu = good_unknowns(&s, &of, &c, &th, &g, MultiIndex::tangential(1)).unwrap();
        let eta = eta_fields(&s, &of, &c, &th, &g).unwrap();
        // central differences act on sin(x) through the symbol sin(dx) / dx
        let sym = g.dx.sin() / g.dx;
        let psi_x = ops::sample(&g, |x, y| 0.3 * sym * x.cos() * (1.0 - (-y).exp()));
        let u_beta = ops::dx(&s.u, &g) - &(&eta.eta1 * &psi_x);
        let h_beta = ops::dx(&s.h, &g) - &(&eta.eta2 * &psi_x);
        ops::sup_abs(&(&gu.u_beta - &u_beta)).max(ops::sup_abs(&(&gu.h_beta - &h_beta)))
    };
    let (a, b) = (err(385), err(769));
    assert!(a < 1e-2);
    assert!(ops::observed_order(a, b, 2.0) > 1.9, "{a:e} -> {b:e}");
}

#[test]
fn equivalence_holds_for_a_large_positivity_threshold() {
    let g = grid(32, 385);
    let draw = StateDraw::random(&mut rng(8));
    let s = State {
        u: draw.state(&g).u,
        h: ops::sample(&g, |_, _| 1.0),
        t: 0.0,
    };
    let of = OuterFlow::from_family(&TraceFamily::Constant { u: 1.0, h: 1.0 });
    let th = StabilityThresholds::new(0.5, 0.0).unwrap();
    for b in 1..=3 {
        let r = equivalence_check(&s, &of, &Cutoff::default(), &th, &g, MultiIndex::tangential(b), 0.0).unwrap();
        assert!(r.pass, "b = {b}: ratio {} in [{}, {}]", r.ratio, r.lower, r.upper);
    }
}

#[test]
fn advective_step_halves_with_the_tangential_spacing() {
    let of = OuterFlow::from_family(&TraceFamily::Constant { u: 1.0, h: 1.0 });
    let c = Cutoff::default();
    let cfg = SolverConfig { dt: 10.0, ..SolverConfig::default() };
    let draw = StateDraw::random(&mut rng(12));
    let dt = |nx: usize| {
        let g = grid(nx, 97);
        cfl_dt(&draw.state(&g), &of, &c, &g, &cfg).unwrap()
    };
    assert_relative_eq!(dt(32) / dt(64), 2.0, max_relative = 0.02);
    let g = grid(16, 97);
    let zero = cfl_dt(&State::zeros(&g, 0.0), &OuterFlow::zero(), &c, &g, &cfg).unwrap();
    assert_eq!(zero, cfg.dt);
}

#[test]
fn crocco_inverse_matches_root_finding() {
    let psi = |y: f64| y + 0.5 * (1.0 - (-y).exp());
    let root = |eta: f64| {
        let mut y = eta;
        for _ in 0..50 {
            y -= (psi(y) - eta) / (1.0 + 0.5 * (-y).exp());
        }
        y
    };
    let err = |ny: usize| {
        let g = Grid2D::new(8, ny, 12.0).unwrap();
        let ps = mhdbl::fields::PhysicalState {
            u1: ops::sample(&g, |_, y| y),
            u2: ops::zeros(&g),
            h1: ops::sample(&g, |_, y| 1.0 + 0.5 * (-y).exp()),
            h2: ops::zeros(&g),
            t: 0.0,
        };
        let eg = eta_grid(8, 201, 10.0).unwrap();
        let cs = to_crocco(&ps, &g, &eg).unwrap();
        // u1 = y, so the mapped field is y(eta)
        eg.y_nodes.iter().enumerate().map(|(j, &e)| (cs.u1[[0, j]] - root(e)).abs()).fold(0.0, f64::max)
    };
    let (a, b) = (err(2401), err(4801));
    assert!(b < 1e-6, "{b:e}");
    assert!(ops::observed_order(a, b, 2.0) > 1.9, "{a:e} -> {b:e}");
}

#[test]
fn crocco_heat_mode_decays_at_the_discrete_rate() {
    let (n, eta_max, mu, dt) = (129usize, 8.0, 0.9, 0.05);
    let eg = eta_grid(8, n, eta_max).unwrap();
    let k = PI / eta_max;
    let st = CroccoState {
        u1: ops::sample(&eg, |_, e| (k * e).sin()),
        h1: ops::sample(&eg, |_, _| 1.0),
        grid: eg.clone(),
        tau: 0.0,
    };
    let of = OuterFlow::from_family(&TraceFamily::Constant { u: 0.0, h: 1.0 });
    let cfg = SolverConfig { mu, kappa: mu, scheme: Scheme::ImexBe, adaptive_dt: false, ..SolverConfig::default() };
    let mut s = CroccoSolver::new(st.clone(), of, cfg).unwrap();
    s.step(dt).unwrap();
    let lam = 4.0 / (eg.dy * eg.dy) * (0.5 * k * eg.dy).sin().powi(2);
    let factor = 1.0 / (1.0 + dt * mu * lam);
    for j in 1..n - 1 {
        assert!((s.state().u1[[3, j]] - factor * st.u1[[3, j]]).abs() < 1e-12);
    }
    assert!(ops::sup_abs(&(&s.state().h1 - 1.0)) < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sources_vanish_off_the_cutoff_transition(
        u0 in -1.0f64..1.0, amp in 0.0f64..0.4, ratio in 0.0f64..1.5, burgers in any::<bool>(), t in 0.0f64..2.0,
    ) {
        let g = grid(16, 193);
        let c = Cutoff::default();
        let fam = if burgers { TraceFamily::Burgers { amp } } else { TraceFamily::SteadyPair { u0, amp, ratio } };
        let of = OuterFlow::from_family(&fam);
        let src = source_r(&of, &c, &g, t, 0.7, 1.1);
        let px = of.profile(mhdbl::outer::Trace::P, 0, 1, t, &g);
        for i in 0..g.nx {
            for (j, &y) in g.y_nodes.iter().enumerate() {
                if y <= c.r0 {
                    prop_assert!((src.r1[[i, j]] + px[i]).abs() <= 1e-12);
                    prop_assert!(src.r2[[i, j]].abs() <= 1e-12);
                    prop_assert!(src.r3[[i, j]].abs() <= 1e-12);
                }
                if y >= 2.0 * c.r0 {
                    prop_assert!(src.r1[[i, j]].abs() <= 1e-12);
                    prop_assert!(src.r2[[i, j]].abs() <= 1e-12);
                    prop_assert!(src.r3[[i, j]].abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn truncation_height_only_matters_through_the_hardy_tail() {
    // same dy, domain height 12 vs 18. The trace bound sees nothing of the extra
    // strip; the Hardy primitive tends to F(x) = int_0^inf f dy, so the lambda = 1
    // left side gains exactly sum_x dx F^2 * int_12^18 (1 + y)^-2 dy.
    let (short, tall) = (Grid2D::new(16, 385, 12.0).unwrap(), Grid2D::new(16, 577, 18.0).unwrap());
    for seed in 0..5 {
        let draw = mhdbl::corpus::FieldDraw::random(&mut rng(seed), 3);
        let (fs, ft) = (draw.sample(&short), draw.sample(&tall));
        let a = mhdbl::inequalities::verify_trace0(&fs, &short).unwrap();
        let b = mhdbl::inequalities::verify_trace0(&ft, &tall).unwrap();
        assert_relative_eq!(a.ratio, b.ratio, max_relative = 1e-9);

        let mut prim = vec![0.0; short.ny];
        let tail_mass: f64 = fs
            .rows()
            .into_iter()
            .map(|c| {
                ops::cumtrapz_1d(c.as_slice().unwrap(), short.dy, &mut prim);
                short.dx * prim[short.ny - 1].powi(2)
            })
            .sum();
        let gain = tail_mass * (1.0 / 13.0 - 1.0 / 19.0);
        let hs = mhdbl::inequalities::verify_hardy_field(&fs, &short, 1.0, HardyVariant::Normal1).unwrap();
        let ht = mhdbl::inequalities::verify_hardy_field(&ft, &tall, 1.0, HardyVariant::Normal1).unwrap();
        assert_relative_eq!(ht.lhs.powi(2) - hs.lhs.powi(2), gain, max_relative = 1e-3);
        assert_relative_eq!(ht.rhs_base, hs.rhs_base, max_relative = 1e-9);
        assert!(hs.pass && ht.pass);
    }
}
