//! Grid, cutoff, difference operators, outer traces and the tridiagonal solve.

use approx::assert_relative_eq;
use mhdbl::grid::{weight, Cutoff, Grid2D};
use mhdbl::ops;
use mhdbl::outer::{matching_residual, OuterFlow, TraceFamily};
use mhdbl::solver::tridiag::{thomas, ColumnOperator, WallCondition};
use proptest::prelude::*;

fn grid(nx: usize, ny: usize) -> Grid2D {
    Grid2D::new(nx, ny, 12.0).unwrap()
}

#[test]
fn grid_rejects_bad_shapes() {
    assert!(Grid2D::new(7, 64, 12.0).is_err());
    assert!(Grid2D::new(4, 64, 12.0).is_err());
    assert!(Grid2D::new(16, 4, 12.0).is_err());
    assert!(Grid2D::new(16, 64, -1.0).is_err());
    assert!(Grid2D::new(16, 64, 3.0).unwrap().check_cutoff(&Cutoff::default()).is_err());
}

#[test]
fn refinement_keeps_the_domain() {
    let g = grid(16, 65);
    let f = g.refined(2).unwrap();
    assert_eq!((f.nx, f.ny), (32, 129));
    assert_eq!(f.y_max, g.y_max);
    assert_relative_eq!(f.dy * 2.0, g.dy, max_relative = 1e-14);
}

#[test]
fn cutoff_derivatives_match_finite_differences() {
    let c = Cutoff::default();
    let h = 1e-5;
    for k in 1..200 {
        let y = 0.9 + 1.2 * k as f64 / 200.0;
        for order in 0..3 {
            let fd = (c.eval(y + h, order) - c.eval(y - h, order)) / (2.0 * h);
            assert!((fd - c.eval(y, order + 1)).abs() < 1e-3 * (1.0 + fd.abs()), "order {order} at {y}");
        }
    }
}

#[test]
fn difference_operators_reach_second_order() {
    let err = |n: usize| {
        let g = grid(n, 8 * n + 1);
        let f = ops::sample(&g, |x, y| x.sin() * (-y).exp());
        let fy = ops::sample(&g, |x, y| -x.sin() * (-y).exp());
        let fyy = ops::sample(&g, |x, y| x.sin() * (-y).exp());
        (ops::norm_l2(&(ops::dy(&f, &g) - &fy), &g), ops::norm_l2(&(ops::dyy(&f, &g) - &fyy), &g))
    };
    let (a, b) = (err(16), err(32));
    assert!(ops::observed_order(a.0, b.0, 2.0) > 1.9);
    assert!(ops::observed_order(a.1, b.1, 2.0) > 1.9);
}

#[test]
fn x_differences_act_on_fourier_modes_by_their_symbols() {
    let g = grid(32, 65);
    let k = 3.0;
    let f = ops::sample(&g, |x, y| (k * x).cos() * (1.0 + y));
    let s1 = (k * g.dx).sin() / g.dx;
    let fx = ops::sample(&g, |x, y| -s1 * (k * x).sin() * (1.0 + y));
    assert!(ops::sup_abs(&(ops::dx(&f, &g) - &fx)) < 1e-11);
    let s2 = 4.0 * (0.5 * k * g.dx).sin().powi(2) / (g.dx * g.dx);
    let fxx = ops::sample(&g, |x, y| -s2 * (k * x).cos() * (1.0 + y));
    assert!(ops::sup_abs(&(ops::dx_pow(&f, &g, 2) - &fxx)) < 1e-10);
}

#[test]
fn shipped_traces_satisfy_the_matching_condition() {
    let g = grid(64, 65);
    let families = [
        TraceFamily::Constant { u: 1.0, h: 1.0 },
        TraceFamily::Constant { u: 0.0, h: 0.0 },
        TraceFamily::SteadyPair { u0: 1.0, amp: 0.1, ratio: 1.2 },
        TraceFamily::SteadyPair { u0: 0.7, amp: 0.3, ratio: 0.5 },
        TraceFamily::Burgers { amp: 0.4 },
    ];
    for fam in families {
        let of = OuterFlow::from_family(&fam);
        for t in [0.0, 0.3, 1.0] {
            let (r1, r2) = matching_residual(&of, t, &g);
            let worst = r1.iter().chain(&r2).fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(worst <= 1e-10, "{fam:?} at t = {t}: {worst:e}");
        }
    }
}

#[test]
fn thomas_solves_a_known_system() {
    let n = 6;
    let lower = vec![-1.0; n];
    let diag = vec![4.0; n];
    let upper = vec![-1.0; n];
    let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let mut rhs: Vec<f64> = (0..n)
        .map(|i| {
            let mut r = diag[i] * x[i];
            if i > 0 {
                r += lower[i] * x[i - 1];
            }
            if i + 1 < n {
                r += upper[i] * x[i + 1];
            }
            r
        })
        .collect();
    let mut scratch = vec![0.0; n];
    thomas(&lower, &diag, &upper, &mut rhs, &mut scratch);
    for (a, b) in rhs.iter().zip(&x) {
        assert_relative_eq!(a, b, epsilon = 1e-13);
    }
}

#[test]
fn implicit_diffusion_decays_the_lowest_mode_at_the_discrete_rate() {
    // Dirichlet at both ends: sin(pi y / L) is an eigenvector of the discrete Laplacian.
    let (ny, len, nu, tau) = (101usize, 12.0, 0.7, 0.05);
    let dy = len / (ny - 1) as f64;
    let k = std::f64::consts::PI / len;
    let op = ColumnOperator::new(ny, dy, nu, tau, 0.0, WallCondition::Dirichlet);
    let mut f: Vec<f64> = (0..ny).map(|j| (k * j as f64 * dy).sin()).collect();
    f[ny - 1] = 0.0;
    let before = f.clone();
    let mut scratch = vec![0.0; ny];
    op.solve(&mut f, &mut scratch);
    let lam = 4.0 * nu / (dy * dy) * (0.5 * k * dy).sin().powi(2);
    let factor = 1.0 / (1.0 + tau * lam);
    for j in 1..ny - 1 {
        assert_relative_eq!(f[j], factor * before[j], epsilon = 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cutoff_vanishes_near_the_wall_and_is_identity_far_away(r0 in 0.2f64..2.0, s in 0.0f64..1.0) {
        let c = Cutoff::new(r0).unwrap();
        let below = s * r0;
        prop_assert_eq!(c.all(below), [0.0; 4]);
        let above = 2.0 * r0 + 5.0 * s;
        prop_assert_eq!(c.all(above), [above, 1.0, 0.0, 0.0]);
        let mid = r0 * (1.0 + s);
        prop_assert!(c.eval(mid, 1) >= 0.0);
    }

    #[test]
    fn weight_is_at_least_one_for_non_negative_powers(y in 0.0f64..50.0, p in 0.0f64..4.0) {
        prop_assert!(weight(y, p) >= 1.0);
        prop_assert!((weight(y, p) * weight(y, -p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cumulative_integral_inverts_the_derivative_of_quadratics(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g = grid(8, 97);
        let f = ops::sample(&g, |_, y| a * y + b * y * y);
        let back = ops::cumtrapz_y(&ops::dy(&f, &g), &g);
        // both the three-point derivative and the trapezoid of a linear function are exact
        prop_assert!(ops::sup_abs(&(back - &f)) < 1e-10);
    }

    #[test]
    fn implicit_diffusion_does_not_raise_the_max_norm(
        vals in proptest::collection::vec(-1.0f64..1.0, 30),
        nu in 0.1f64..2.0,
        tau in 1e-3f64..1.0,
        neumann in any::<bool>(),
    ) {
        let ny = vals.len();
        let wall = if neumann { WallCondition::Neumann } else { WallCondition::Dirichlet };
        let op = ColumnOperator::new(ny, 0.1, nu, tau, 0.0, wall);
        let mut f = vals.clone();
        f[ny - 1] = 0.0;
        if !neumann {
            f[0] = 0.0;
        }
        let before = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut scratch = vec![0.0; ny];
        op.solve(&mut f, &mut scratch);
        let after = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(after <= before * (1.0 + 1e-12));
    }
}
