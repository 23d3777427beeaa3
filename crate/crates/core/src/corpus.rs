//! Seeded corpora of smooth, rapidly decaying fields and admissible states.

use crate::fields::State;
use crate::grid::Grid2D;
use crate::ops::{self, Field};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parameters of one random field `sum_k (a_k cos kx + b_k sin kx)(c0_k + c1_k y) e^{-r_k y}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDraw {
    pub modes: Vec<(f64, f64, f64, f64, f64)>,
}

impl FieldDraw {
    pub fn random(rng: &mut impl Rng, max_k: usize) -> Self {
        let modes = (0..=max_k)
            .map(|k| {
                let scale = 1.0 / (1.0 + k as f64);
                (
                    rng.gen_range(-1.0..1.0) * scale,
                    rng.gen_range(-1.0..1.0) * scale,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(1.0..3.0),
                )
            })
            .collect();
        Self { modes }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.modes
            .iter()
            .enumerate()
            .map(|(k, &(a, b, c0, c1, r))| {
                let kx = k as f64 * x;
                (a * kx.cos() + b * kx.sin()) * (c0 + c1 * y) * (-r * y).exp()
            })
            .sum()
    }

    pub fn sample(&self, grid: &Grid2D) -> Field {
        ops::sample(grid, |x, y| self.eval(x, y))
    }
}

/// A random smooth decaying field on the grid.
pub fn random_field(rng: &mut impl Rng, grid: &Grid2D) -> Field {
    FieldDraw::random(rng, 3).sample(grid)
}

/// A random `y`-profile `(c0 + c1 y) e^{-r y} + c2 y^2 e^{-r2 y}`.
pub fn random_profile(rng: &mut impl Rng, grid: &Grid2D) -> Vec<f64> {
    let c0 = rng.gen_range(-1.0..1.0);
    let c1 = rng.gen_range(-1.0..1.0);
    let c2 = rng.gen_range(-1.0..1.0);
    let r = rng.gen_range(1.0..3.0);
    let r2 = rng.gen_range(1.5..3.0);
    grid.y_nodes
        .iter()
        .map(|&y| (c0 + c1 * y) * (-r * y).exp() + c2 * y * y * (-r2 * y).exp())
        .collect()
}

/// Parameters of a random admissible state.
///
/// `u = sum_k (a_k cos kx + b_k sin kx) y e^{-r y}` vanishes at the wall;
/// `h = (h_w + small trig) (1 + s y) e^{-s y}` has zero wall slope and stays
/// positive, so `h + H phi' > 0` for non-negative `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDraw {
    pub u_modes: Vec<(f64, f64)>,
    pub r: f64,
    pub h_wall: f64,
    pub h_modes: Vec<(f64, f64)>,
    pub s: f64,
}

impl StateDraw {
    pub fn random(rng: &mut impl Rng) -> Self {
        let u_modes = (0..3)
            .map(|k| {
                let sc = 0.5 / (1.0 + k as f64);
                (rng.gen_range(-1.0..1.0) * sc, rng.gen_range(-1.0..1.0) * sc)
            })
            .collect();
        let h_wall = rng.gen_range(0.4..0.8);
        let h_modes = (1..3)
            .map(|_| {
                let sc = 0.12 * h_wall;
                (rng.gen_range(-1.0..1.0) * sc, rng.gen_range(-1.0..1.0) * sc)
            })
            .collect();
        Self {
            u_modes,
            r: rng.gen_range(1.0..2.0),
            h_wall,
            h_modes,
            s: rng.gen_range(0.8..1.5),
        }
    }

    pub fn u(&self, x: f64, y: f64) -> f64 {
        let amp: f64 = self
            .u_modes
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| {
                let kx = k as f64 * x;
                a * kx.cos() + b * kx.sin()
            })
            .sum();
        amp * y * (-self.r * y).exp()
    }

    pub fn h(&self, x: f64, y: f64) -> f64 {
        let amp: f64 = self.h_wall
            + self
                .h_modes
                .iter()
                .enumerate()
                .map(|(k, &(a, b))| {
                    let kx = (k + 1) as f64 * x;
                    a * kx.cos() + b * kx.sin()
                })
                .sum::<f64>();
        amp * (1.0 + self.s * y) * (-self.s * y).exp()
    }

    pub fn state(&self, grid: &Grid2D) -> State {
        State {
            u: ops::sample(grid, |x, y| self.u(x, y)),
            h: ops::sample(grid, |x, y| self.h(x, y)),
            t: 0.0,
        }
    }
}
