//! State handling, derived fields, weighted norms and run-time monitors.

use mhdbl::corpus::{rng, FieldDraw, StateDraw};
use mhdbl::diagnostics::{monitor, MonitorConfig};
use mhdbl::fields::{
    from_physical, recover_vg, to_physical, validate_initial, InitialFamily, StabilityThresholds, State,
};
use mhdbl::grid::{Cutoff, Grid2D};
use mhdbl::norms::{hnorm, weighted_norm, History, MultiIndex};
use mhdbl::ops;
use mhdbl::outer::{OuterFlow, TraceFamily};
use mhdbl::system::Coefficients;
use mhdbl::Error;
use proptest::prelude::*;

fn grid(nx: usize, ny: usize) -> Grid2D {
    Grid2D::new(nx, ny, 12.0).unwrap()
}

fn unit_coeffs() -> Coefficients {
    Coefficients { mu: 1.0, kappa: 1.0 }
}

#[test]
fn recovered_normal_components_are_divergence_free_to_second_order() {
    let draw = StateDraw::random(&mut rng(11));
    let res = |n: usize| {
        let g = grid(n, 4 * n + 1);
        let s = draw.state(&g);
        let d = recover_vg(&s, &g);
        let div_u = ops::dx(&s.u, &g) + &ops::dy(&d.v, &g);
        let div_h = ops::dx(&s.h, &g) + &ops::dy(&d.g, &g);
        // both components vanish on the wall by construction
        assert!(d.v.column(0).iter().chain(d.g.column(0).iter()).all(|v| *v == 0.0));
        ops::norm_l2(&div_u, &g).hypot(ops::norm_l2(&div_h, &g))
    };
    let (a, b) = (res(32), res(64));
    assert!(ops::observed_order(a, b, 2.0) > 1.8, "{a:e} -> {b:e}");
}

#[test]
fn default_initial_data_pass_validation() {
    let g = grid(64, 769);
    let of = OuterFlow::from_family(&TraceFamily::Constant { u: 1.0, h: 1.0 });
    let c = Cutoff::default();
    let s0 = InitialFamily::default().build(&g, &of, &c);
    let r = validate_initial(&s0, &of, &c, &StabilityThresholds::default(), &g);
    assert!(r.passed(), "{:?}", r.failures());
    assert!(r.h1_min >= 0.2);
}

#[test]
fn validation_reports_positivity_loss() {
    let g = grid(16, 97);
    let of = OuterFlow::zero();
    let c = Cutoff::default();
    let s0 = InitialFamily::Zero.build(&g, &of, &c);
    let r = validate_initial(&s0, &of, &c, &StabilityThresholds::default(), &g);
    assert!(!r.positivity_ok);
    assert!(r.wall_ok && r.far_ok);
    assert_eq!(r.failures().len(), 1);
}

#[test]
fn weighted_norm_rejects_large_orders_and_mismatched_history() {
    let g = grid(16, 65);
    let f = ops::zeros(&g);
    assert!(matches!(
        weighted_norm(&[&f], &g, 0.0, 5, None),
        Err(Error::IndexBudget { requested: 5, max: 4 })
    ));
    let prev: [&ops::Field; 0] = [];
    let h = History { prev: &prev, dt: 0.1 };
    assert!(matches!(weighted_norm(&[&f], &g, 0.0, 2, Some(h)), Err(Error::MissingHistory)));
}

#[test]
fn weighted_norm_with_history_adds_the_time_difference() {
    let g = grid(16, 129);
    let f = FieldDraw::random(&mut rng(2), 2).sample(&g);
    let p = &f * 0.5;
    let spatial = weighted_norm(&[&f], &g, 0.5, 2, None).unwrap();
    let prev = [&p];
    let full = weighted_norm(&[&f], &g, 0.5, 2, Some(History { prev: &prev, dt: 0.5 })).unwrap();
    // (f - f/2)/0.5 = f, so the time part is the spatial norm of order m - 1
    let lower = weighted_norm(&[&f], &g, 0.5, 1, None).unwrap();
    assert!((full.total.powi(2) - spatial.total.powi(2) - lower.total.powi(2)).abs() < 1e-9 * full.total.powi(2));
    assert_eq!(full.contributions.len(), 6 + 3);
}

#[test]
fn monitor_on_zero_state_is_zero() {
    let g = grid(16, 97);
    let of = OuterFlow::zero();
    let s = State::zeros(&g, 0.0);
    let m = monitor(&s, &of, &Cutoff::default(), &StabilityThresholds::default(), &g, &MonitorConfig::default(), unit_coeffs());
    assert_eq!((m.energy, m.w1, m.w2, m.hmin), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn monitor_sees_unit_magnetic_field() {
    let g = grid(16, 97);
    let of = OuterFlow::zero();
    let s = State {
        u: ops::zeros(&g),
        h: ops::sample(&g, |_, _| 1.0),
        t: 0.0,
    };
    let m = monitor(&s, &of, &Cutoff::default(), &StabilityThresholds::default(), &g, &MonitorConfig::default(), unit_coeffs());
    assert_eq!(m.hmin, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn physical_variables_round_trip(seed in 0u64..1000, u0 in -1.0f64..1.0, amp in 0.0f64..0.3, ratio in 0.5f64..1.5) {
        let g = grid(16, 97);
        let of = OuterFlow::from_family(&TraceFamily::SteadyPair { u0, amp, ratio });
        let c = Cutoff::default();
        let s = StateDraw::random(&mut rng(seed)).state(&g);
        let back = from_physical(&to_physical(&s, &of, &c, &g), &of, &c, &g);
        prop_assert!(back.distance(&s, &g) < 1e-12);
    }

    #[test]
    fn weighted_norms_grow_with_the_weight(seed in 0u64..1000, l in 0.0f64..2.0) {
        let g = grid(16, 129);
        let f = FieldDraw::random(&mut rng(seed), 2).sample(&g);
        prop_assert!(hnorm(&f, &g, l, 2) <= hnorm(&f, &g, l + 0.5, 2) * (1.0 + 1e-12));
        prop_assert!(hnorm(&f, &g, l, 1) <= hnorm(&f, &g, l, 2) * (1.0 + 1e-12));
    }

    #[test]
    fn norm_contributions_cover_every_index(m in 0usize..=4) {
        let g = grid(16, 65);
        let f = FieldDraw::random(&mut rng(m as u64), 1).sample(&g);
        let r = weighted_norm(&[&f], &g, 0.0, m, None).unwrap();
        prop_assert_eq!(r.contributions.len(), MultiIndex::spatial_up_to(m).len());
        let sum: f64 = r.contributions.iter().map(|(_, v)| v * v).sum();
        prop_assert!((sum.sqrt() - r.total).abs() <= 1e-12 * (1.0 + r.total));
    }
}
