//! Discretized domain, polynomial weight and the boundary-layer cutoff.
//!
//! The domain is the periodic strip `T x [0, y_max]`. Nodes are uniform in both
//! directions; the periodic node at `x = x_period` is not stored.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Uniform tensor grid, periodic in `x`, truncated half-line in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub x_period: f64,
    pub y_max: f64,
    pub dx: f64,
    pub dy: f64,
    pub x_nodes: Vec<f64>,
    pub y_nodes: Vec<f64>,
}

impl Grid2D {
    /// Builds a grid on `[0, 2 pi) x [0, y_max]`.
    pub fn new(nx: usize, ny: usize, y_max: f64) -> Result<Self> {
        Self::with_period(nx, ny, 2.0 * PI, y_max)
    }

    pub fn with_period(nx: usize, ny: usize, x_period: f64, y_max: f64) -> Result<Self> {
        if nx < 8 || nx % 2 != 0 {
            return Err(Error::InvalidGrid(format!("nx = {nx} must be even and >= 8")));
        }
        if ny < 8 {
            return Err(Error::InvalidGrid(format!("ny = {ny} must be >= 8")));
        }
        if !(y_max > 0.0 && y_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("y_max = {y_max} must be positive")));
        }
        if !(x_period > 0.0 && x_period.is_finite()) {
            return Err(Error::InvalidGrid(format!("x_period = {x_period} must be positive")));
        }
        let dx = x_period / nx as f64;
        let dy = y_max / (ny - 1) as f64;
        let x_nodes = (0..nx).map(|i| i as f64 * dx).collect();
        let mut y_nodes: Vec<f64> = (0..ny).map(|j| j as f64 * dy).collect();
        y_nodes[ny - 1] = y_max;
        Ok(Self {
            nx,
            ny,
            x_period,
            y_max,
            dx,
            dy,
            x_nodes,
            y_nodes,
        })
    }

    /// Same domain with `factor` times as many cells in each direction.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::with_period(
            self.nx * factor,
            (self.ny - 1) * factor + 1,
            self.x_period,
            self.y_max,
        )
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Rejects cutoffs whose transition layer does not fit well inside the box.
    pub fn check_cutoff(&self, c: &Cutoff) -> Result<()> {
        if self.y_max < 4.0 * c.r0 {
            return Err(Error::IncompatibleCutoff {
                y_max: self.y_max,
                limit: 4.0 * c.r0,
            });
        }
        Ok(())
    }
}

/// The weight `<y>^p = (1 + y)^p`.
#[inline]
pub fn weight(y: f64, p: f64) -> f64 {
    (1.0 + y).powf(p)
}

/// Truncated Taylor expansion `sum c_k eps^k` up to third order.
///
/// Forward-mode differentiation of the smoothstep; `c_k = f^(k) / k!`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet([f64; 4]);

impl Jet {
    fn constant(v: f64) -> Self {
        Jet([v, 0.0, 0.0, 0.0])
    }

    fn variable(v: f64, slope: f64) -> Self {
        Jet([v, slope, 0.0, 0.0])
    }

    fn add(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|k| self.0[k] + o.0[k]))
    }

    fn scale(self, s: f64) -> Jet {
        Jet(self.0.map(|c| c * s))
    }

    fn mul(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|k| {
            (0..=k).map(|i| self.0[i] * o.0[k - i]).sum()
        }))
    }

    fn recip(self) -> Jet {
        let a = self.0;
        let mut b = [0.0; 4];
        b[0] = 1.0 / a[0];
        for k in 1..4 {
            let s: f64 = (1..=k).map(|i| a[i] * b[k - i]).sum();
            b[k] = -s * b[0];
        }
        Jet(b)
    }

    fn exp(self) -> Jet {
        let a = self.0;
        let mut e = [0.0; 4];
        e[0] = a[0].exp();
        for k in 1..4 {
            let s: f64 = (1..=k).map(|i| i as f64 * a[i] * e[k - i]).sum();
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    fn derivative(self, order: usize) -> f64 {
        const FACT: [f64; 4] = [1.0, 1.0, 2.0, 6.0];
        self.0[order] * FACT[order]
    }
}

// Below this argument exp(-1/s) and all its derivatives underflow to zero;
// evaluating them explicitly would produce 0 * inf.
const SIGMA_CUT: f64 = 1.0 / 700.0;

fn sigma(s: Jet) -> Option<Jet> {
    if s.0[0] <= SIGMA_CUT {
        None
    } else {
        Some(s.recip().scale(-1.0).exp())
    }
}

/// Smoothstep `S(s) = sigma(s) / (sigma(s) + sigma(1 - s))` as a jet in `s`.
fn smoothstep(s: Jet) -> Jet {
    let one_minus = Jet::constant(1.0).add(s.scale(-1.0));
    match (sigma(s), sigma(one_minus)) {
        (None, _) => Jet::constant(0.0),
        (Some(_), None) => Jet::constant(1.0),
        (Some(a), Some(b)) => a.mul(a.add(b).recip()),
    }
}

/// Smooth cutoff `phi(y) = y S((y - r0) / r0)`: zero below `r0`, equal to `y`
/// above `2 r0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub r0: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self { r0: 1.0 }
    }
}

impl Cutoff {
    pub fn new(r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff r0 = {r0} must be positive")));
        }
        Ok(Self { r0 })
    }

    /// `phi^(order)(y)` for `order <= 3`; higher orders are not supported.
    pub fn eval(&self, y: f64, order: usize) -> f64 {
        self.all(y)[order]
    }

    /// `[phi, phi', phi'', phi''']` at `y`.
    pub fn all(&self, y: f64) -> [f64; 4] {
        if y <= self.r0 {
            return [0.0; 4];
        }
        if y >= 2.0 * self.r0 {
            return [y, 1.0, 0.0, 0.0];
        }
        let s = Jet::variable((y - self.r0) / self.r0, 1.0 / self.r0);
        let phi = Jet::variable(y, 1.0).mul(smoothstep(s));
        [0, 1, 2, 3].map(|k| phi.derivative(k))
    }

    /// Profiles of `phi^(order)` sampled on the grid's `y` nodes.
    pub fn profile(&self, grid: &Grid2D, order: usize) -> Vec<f64> {
        grid.y_nodes.iter().map(|&y| self.eval(y, order)).collect()
    }

    /// All four derivative profiles at once, indexed `[order][j]`.
    pub fn profiles(&self, grid: &Grid2D) -> [Vec<f64>; 4] {
        let mut out: [Vec<f64>; 4] = Default::default();
        for &y in &grid.y_nodes {
            let v = self.all(y);
            for k in 0..4 {
                out[k].push(v[k]);
            }
        }
        out
    }

    /// `max phi'` over `[r0, 2 r0]`, sampled densely.
    pub fn max_slope(&self) -> f64 {
        let n = 20_000;
        (0..=n)
            .map(|i| self.eval(self.r0 * (1.0 + i as f64 / n as f64), 1))
            .fold(0.0, f64::max)
    }

    /// `sup_y <y>^p |phi^(order)(y)|` over `[0, y_max]`, sampled densely.
    pub fn weighted_sup(&self, order: usize, p: f64, y_max: f64) -> f64 {
        let n = 20_000;
        (0..=n)
            .map(|i| {
                let y = y_max * i as f64 / n as f64;
                weight(y, p) * self.eval(y, order).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_arithmetic() {
        let g = Grid2D::new(8, 9, 8.0).unwrap();
        assert_relative_eq!(g.dx, 2.0 * PI / 8.0);
        assert_relative_eq!(g.dy, 1.0);
        assert_eq!(g.y_nodes, (0..9).map(|j| j as f64).collect::<Vec<_>>());
        let g = Grid2D::new(256, 257, 12.0).unwrap();
        assert_eq!(g.dy, 0.046875);
    }

    #[test]
    fn grid_rejections() {
        assert!(Grid2D::new(8, 9, 0.0).is_err());
        assert!(Grid2D::new(9, 9, 1.0).is_err());
        assert!(Grid2D::new(6, 9, 1.0).is_err());
        assert!(Grid2D::new(8, 7, 1.0).is_err());
    }

    #[test]
    fn weight_values() {
        assert_eq!(weight(0.0, 5.0), 1.0);
        assert_eq!(weight(1.0, 2.0), 4.0);
        assert_eq!(weight(3.0, -1.0), 0.25);
    }

    #[test]
    fn cutoff_plateaus() {
        let c = Cutoff::default();
        assert_eq!(c.eval(0.5, 0), 0.0);
        assert_eq!(c.all(0.99), [0.0; 4]);
        assert_eq!(c.eval(3.0, 1), 1.0);
        assert_eq!(c.all(2.0), [2.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let c = Cutoff::new(1.3).unwrap();
        let h = 1e-5;
        for &y in &[1.35, 1.6, 1.95, 2.2, 2.5] {
            for k in 0..3 {
                let fd = (c.eval(y + h, k) - c.eval(y - h, k)) / (2.0 * h);
                assert!(
                    (fd - c.eval(y, k + 1)).abs() < 1e-5 * (1.0 + fd.abs()),
                    "y={y} order={k}: fd={fd} jet={}",
                    c.eval(y, k + 1)
                );
            }
        }
    }
}
