//! Primal and Crocco time stepping, the manufactured forcing, the majorant
//! comparison and the difference experiment.

use approx::assert_relative_eq;
use mhdbl::corpus::{rng, StateDraw};
use mhdbl::diagnostics::{compare_majorant, ode_majorant, uniqueness_experiment, MajorantInput};
use mhdbl::fields::{to_physical, InitialFamily, PhysicalState, State};
use mhdbl::grid::{Cutoff, Grid2D};
use mhdbl::mms::{manufactured_forcing, AnalyticState, ManufacturedPair, ZeroState};
use mhdbl::ops;
use mhdbl::outer::{OuterFlow, TraceFamily};
use mhdbl::solver::crocco::eta_grid;
use mhdbl::solver::{run_primal, to_crocco, CroccoSolver, CroccoState, PrimalSolver, RunOptions, Scheme, SolverConfig};
use mhdbl::system::Coefficients;
use mhdbl::Error;
use proptest::prelude::*;
use std::sync::Arc;

fn grid(nx: usize, ny: usize) -> Grid2D {
    Grid2D::new(nx, ny, 12.0).unwrap()
}

fn free_config(scheme: Scheme, eps: f64) -> SolverConfig {
    SolverConfig {
        scheme,
        eps,
        adaptive_dt: false,
        enforce_positivity: false,
        ..SolverConfig::default()
    }
}

fn constant_flow() -> OuterFlow {
    OuterFlow::from_family(&TraceFamily::Constant { u: 1.0, h: 1.0 })
}

#[test]
fn zero_forcing_for_the_zero_descriptor() {
    let g = grid(16, 97);
    let (fu, fh) = manufactured_forcing(&ZeroState, &OuterFlow::zero(), &Cutoff::default(), &g, Coefficients { mu: 1.0, kappa: 0.5 }, 0.3);
    assert_eq!(ops::sup_abs(&fu), 0.0);
    assert_eq!(ops::sup_abs(&fh), 0.0);
}

#[test]
fn manufactured_run_tracks_the_exact_solution() {
    let g = grid(32, 193);
    let of = constant_flow();
    let c = Cutoff::default();
    let exact = ManufacturedPair::default();
    let cfg = SolverConfig { t_end: 0.2, dt: 0.005, ..free_config(Scheme::ImexCn, 0.0) };
    let mut s = PrimalSolver::new(exact.state(&g, 0.0), of, c, g.clone(), cfg)
        .unwrap()
        .with_forcing(Arc::new(exact));
    s.advance_to(0.2).unwrap();
    let err = s.state().distance(&exact.state(&g, 0.2), &g);
    assert!(err < 1e-2, "{err:e}");
}

#[test]
fn crocco_linear_profile_is_steady() {
    // u1 linear in eta with h1 = 1 balances every term for constant traces.
    let eg = eta_grid(16, 129, 8.0).unwrap();
    let st = CroccoState {
        u1: ops::sample(&eg, |_, e| e / 8.0),
        h1: ops::sample(&eg, |_, _| 1.0),
        grid: eg.clone(),
        tau: 0.0,
    };
    for scheme in [Scheme::ImexBe, Scheme::ImexCn] {
        let cfg = SolverConfig { mu: 0.7, kappa: 1.3, ..free_config(scheme, 0.0) };
        let mut s = CroccoSolver::new(st.clone(), constant_flow(), cfg).unwrap();
        for _ in 0..10 {
            s.step(0.05).unwrap();
        }
        assert!(ops::sup_abs(&(&s.state().u1 - &st.u1)) < 1e-12);
        assert!(ops::sup_abs(&(&s.state().h1 - &st.h1)) < 1e-12);
    }
}

fn physical(g: &Grid2D, u1: impl Fn(f64) -> f64, h1: f64) -> PhysicalState {
    PhysicalState {
        u1: ops::sample(g, |_, y| u1(y)),
        u2: ops::zeros(g),
        h1: ops::sample(g, |_, _| h1),
        h2: ops::zeros(g),
        t: 0.0,
    }
}

#[test]
fn crocco_map_is_the_identity_for_unit_magnetic_field() {
    let g = grid(8, 97);
    let ps = physical(&g, |y| (0.5 * y).sin(), 1.0);
    let cs = to_crocco(&ps, &g, &eta_grid(8, 97, 12.0).unwrap()).unwrap();
    assert!(ops::sup_abs(&(&cs.u1 - &ps.u1)) < 1e-12);
}

#[test]
fn crocco_map_rescales_for_constant_magnetic_field() {
    // psi = 2y, so u1 = 3y becomes 1.5 eta
    let g = grid(8, 97);
    let ps = physical(&g, |y| 3.0 * y, 2.0);
    let eg = eta_grid(8, 49, 24.0).unwrap();
    let cs = to_crocco(&ps, &g, &eg).unwrap();
    let want = ops::sample(&eg, |_, e| 1.5 * e);
    assert!(ops::sup_abs(&(&cs.u1 - &want)) < 1e-10);
    assert!(ops::sup_abs(&(&cs.h1 - 2.0)) < 1e-12);
}

#[test]
fn crocco_map_rejects_non_positive_magnetic_field() {
    let g = grid(8, 97);
    let ps = physical(&g, |y| y, 0.0);
    assert!(matches!(to_crocco(&ps, &g, &eta_grid(8, 97, 1.0).unwrap()), Err(Error::Monotonicity { column: 0 })));
}

#[test]
fn crocco_manufactured_run_is_accurate() {
    use mhdbl::solver::crocco::{CroccoAnalytic, CroccoManufactured};
    let eg = eta_grid(32, 161, 10.0).unwrap();
    let exact = CroccoManufactured::default();
    let cfg = free_config(Scheme::ImexCn, 0.0);
    let mut s = CroccoSolver::new(exact.state(&eg, 0.0), OuterFlow::zero(), cfg).unwrap().with_forcing(Arc::new(exact));
    s.advance_to(0.2).unwrap();
    let want = exact.state(&eg, 0.2);
    let err = ops::norm_l2(&(&s.state().u1 - &want.u1), &eg) + ops::norm_l2(&(&s.state().h1 - &want.h1), &eg);
    assert!(err < 1e-2, "{err:e}");
}

#[test]
fn monitored_run_records_both_endpoints() {
    let g = grid(16, 385);
    let of = constant_flow();
    let c = Cutoff::default();
    let s0 = InitialFamily::default().build(&g, &of, &c);
    let cfg = SolverConfig { t_end: 0.05, dt: 0.01, ..SolverConfig::default() };
    let mut s = PrimalSolver::new(s0, of, c, g, cfg).unwrap();
    let rec = run_primal(&mut s, &RunOptions { monitor_every: 2, ..RunOptions::default() }).unwrap();
    assert!(rec.termination.completed());
    assert_eq!(rec.samples.first().unwrap().t, 0.0);
    assert_relative_eq!(rec.samples.last().unwrap().t, 0.05, epsilon = 1e-12);
    assert_eq!(rec.snapshots.len(), 2);
}

#[test]
fn majorant_matches_the_closed_form() {
    // F = 0, F0 = C = delta0 = 1: z = (1 - 2t)^(-1/2), blowing up at t = 1/2
    let t: Vec<f64> = (0..=80).map(|i| i as f64 * 0.01).collect();
    let mi = MajorantInput { f0: 1.0, f_hat: vec![0.0; t.len()], t: t.clone(), c: 1.0, delta0: 1.0 };
    let rep = ode_majorant(&mi).unwrap();
    assert_relative_eq!(rep.horizon.unwrap(), 0.5, epsilon = 1e-12);
    for (ti, z) in t.iter().zip(&rep.z) {
        match z {
            Some(z) => assert_relative_eq!(*z, (1.0 - 2.0 * ti).powf(-0.5), max_relative = 1e-12),
            None => assert!(*ti >= 0.5),
        }
    }
    let cmp = compare_majorant(&mi, &vec![0.5; t.len()]).unwrap();
    assert_relative_eq!(cmp.first_failure.unwrap(), 0.5, epsilon = 1e-12);
}

#[test]
fn majorant_vanishes_for_zero_data() {
    let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
    let mi = MajorantInput { f0: 0.0, f_hat: vec![0.0; t.len()], t, c: 3.0, delta0: 0.5 };
    let rep = ode_majorant(&mi).unwrap();
    assert!(rep.horizon.is_none());
    assert!(rep.z.iter().all(|z| *z == Some(0.0)));
}

#[test]
fn majorant_rejects_bad_input() {
    let mi = MajorantInput { f0: 1.0, t: vec![0.0, 1.0], f_hat: vec![0.0], c: 1.0, delta0: 1.0 };
    assert!(matches!(ode_majorant(&mi), Err(Error::MajorantBracket)));
    let mi = MajorantInput { f0: 1.0, t: vec![0.0], f_hat: vec![0.0], c: -1.0, delta0: 1.0 };
    assert!(ode_majorant(&mi).is_err());
}

#[test]
fn identical_data_give_a_zero_difference() {
    let g = grid(16, 385);
    let of = constant_flow();
    let c = Cutoff::default();
    let s0 = InitialFamily::default().build(&g, &of, &c);
    let pert = StateDraw::random(&mut rng(3)).state(&g);
    let cfg = SolverConfig { t_end: 0.05, dt: 0.01, ..SolverConfig::default() };
    let reps = uniqueness_experiment(&s0, &pert, &[0.0, 1e-3], &of, &c, &g, &cfg, 1).unwrap();
    assert!(reps[0].samples.iter().all(|s| s.n == 0.0));
    assert!(reps[0].c_hat.is_none());
    assert!(reps[1].samples.iter().all(|s| s.n > 0.0));
    assert!(reps[1].hardy_holds(0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn zero_state_is_a_fixed_point(dt in 1e-4f64..0.5, cn in any::<bool>(), eps in prop::sample::select(vec![0.0, 1e-2])) {
        let g = grid(16, 97);
        let scheme = if cn { Scheme::ImexCn } else { Scheme::ImexBe };
        let mut s = PrimalSolver::new(State::zeros(&g, 0.0), OuterFlow::zero(), Cutoff::default(), g.clone(), free_config(scheme, eps)).unwrap();
        for _ in 0..3 {
            s.step(dt).unwrap();
        }
        prop_assert_eq!(ops::sup_abs(&s.state().u), 0.0);
        prop_assert_eq!(ops::sup_abs(&s.state().h), 0.0);
    }

    #[test]
    fn physical_map_of_random_states_feeds_the_crocco_map(seed in 0u64..500) {
        let g = grid(16, 193);
        let of = constant_flow();
        let c = Cutoff::default();
        let s = StateDraw::random(&mut rng(seed)).state(&g);
        let ps = to_physical(&s, &of, &c, &g);
        let eta_max = ops::column_integrals(&ps.h1, &g).into_iter().fold(f64::INFINITY, f64::min);
        let cs = to_crocco(&ps, &g, &eta_grid(16, 65, eta_max).unwrap()).unwrap();
        // no-slip survives the map and h1 stays positive
        prop_assert!(cs.u1.column(0).iter().all(|v| v.abs() < 1e-12));
        prop_assert!(cs.h1.iter().all(|&v| v > 0.0));
    }
}
