//! Second-order finite differences and quadrature on [`Grid2D`].
//!
//! Fields are `Array2<f64>` of shape `(nx, ny)` indexed `[i_x, j_y]`, so each
//! `x`-column is contiguous in memory.
//!
//! * `d/dx`: periodic central differences.
//! * `d/dy`: central in the interior, one-sided second order at both ends.
//! * `d/dy^-1`: cumulative trapezoid from `y = 0`.
//! * Quadrature: rectangle rule in `x` (exact for trigonometric polynomials),
//!   trapezoid in `y`.

use crate::grid::{weight, Grid2D};
use ndarray::{Array2, Zip};

pub type Field = Array2<f64>;

pub fn zeros(grid: &Grid2D) -> Field {
    Array2::zeros(grid.shape())
}

/// Samples `f(x, y)` on the grid nodes.
pub fn sample(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Field {
    Array2::from_shape_fn(grid.shape(), |(i, j)| f(grid.x_nodes[i], grid.y_nodes[j]))
}

/// `out[i, j] = xp[i] * yp[j]`.
pub fn outer(xp: &[f64], yp: &[f64]) -> Field {
    Array2::from_shape_fn((xp.len(), yp.len()), |(i, j)| xp[i] * yp[j])
}

/// `out[i, j] = f[i, j] * yp[j]`.
pub fn mul_y(f: &Field, yp: &[f64]) -> Field {
    let mut out = f.clone();
    for mut col in out.rows_mut() {
        for (v, w) in col.iter_mut().zip(yp) {
            *v *= w;
        }
    }
    out
}

/// `out[i, j] = f[i, j] * xp[i]`.
pub fn mul_x(f: &Field, xp: &[f64]) -> Field {
    let mut out = f.clone();
    for (mut col, &w) in out.rows_mut().into_iter().zip(xp) {
        col.mapv_inplace(|v| v * w);
    }
    out
}

/// Periodic central difference in `x`.
pub fn dx(f: &Field, grid: &Grid2D) -> Field {
    let nx = grid.nx;
    let inv = 0.5 / grid.dx;
    Array2::from_shape_fn(f.dim(), |(i, j)| {
        (f[[(i + 1) % nx, j]] - f[[(i + nx - 1) % nx, j]]) * inv
    })
}

/// Periodic compact second difference in `x`.
pub fn dxx(f: &Field, grid: &Grid2D) -> Field {
    let nx = grid.nx;
    let inv = 1.0 / (grid.dx * grid.dx);
    Array2::from_shape_fn(f.dim(), |(i, j)| {
        (f[[(i + 1) % nx, j]] - 2.0 * f[[i, j]] + f[[(i + nx - 1) % nx, j]]) * inv
    })
}

/// Discrete `d^b/dx^b`: compact second differences for each pair of
/// derivatives, one central first difference for an odd remainder.
pub fn dx_pow(f: &Field, grid: &Grid2D, b: usize) -> Field {
    let mut out = f.clone();
    for _ in 0..b / 2 {
        out = dxx(&out, grid);
    }
    if b % 2 == 1 {
        out = dx(&out, grid);
    }
    out
}

/// Second-order `d/dy` of one column.
pub fn dy_1d(f: &[f64], dy: f64, out: &mut [f64]) {
    let n = f.len();
    let inv = 0.5 / dy;
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv;
    for j in 1..n - 1 {
        out[j] = (f[j + 1] - f[j - 1]) * inv;
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv;
}

/// Second-order `d^2/dy^2` of one column, one-sided four-point stencils at the ends.
pub fn dyy_1d(f: &[f64], dy: f64, out: &mut [f64]) {
    let n = f.len();
    let inv = 1.0 / (dy * dy);
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * inv;
    for j in 1..n - 1 {
        out[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) * inv;
    }
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * inv;
}

/// Cumulative trapezoid `int_0^y f` of one column.
pub fn cumtrapz_1d(f: &[f64], dy: f64, out: &mut [f64]) {
    out[0] = 0.0;
    for j in 1..f.len() {
        out[j] = out[j - 1] + 0.5 * dy * (f[j] + f[j - 1]);
    }
}

/// Trapezoid integral of one column over `[0, y_max]`.
pub fn trapz_1d(f: &[f64], dy: f64) -> f64 {
    let n = f.len();
    let inner: f64 = f[1..n - 1].iter().sum();
    dy * (inner + 0.5 * (f[0] + f[n - 1]))
}

fn map_columns(f: &Field, op: impl Fn(&[f64], &mut [f64])) -> Field {
    let mut out = Array2::zeros(f.dim());
    Zip::from(f.rows()).and(out.rows_mut()).for_each(|src, mut dst| {
        let src = src.as_slice().expect("standard layout");
        op(src, dst.as_slice_mut().expect("standard layout"));
    });
    out
}

pub fn dy(f: &Field, grid: &Grid2D) -> Field {
    map_columns(f, |s, d| dy_1d(s, grid.dy, d))
}

pub fn dyy(f: &Field, grid: &Grid2D) -> Field {
    map_columns(f, |s, d| dyy_1d(s, grid.dy, d))
}

/// `d/dy^-1`: cumulative trapezoid from the wall.
pub fn cumtrapz_y(f: &Field, grid: &Grid2D) -> Field {
    map_columns(f, |s, d| cumtrapz_1d(s, grid.dy, d))
}

/// Column integrals `int_0^{y_max} f(x_i, y) dy`.
pub fn column_integrals(f: &Field, grid: &Grid2D) -> Vec<f64> {
    f.rows()
        .into_iter()
        .map(|c| trapz_1d(c.as_slice().expect("standard layout"), grid.dy))
        .collect()
}

/// `int_Omega f`: rectangle rule in `x`, trapezoid in `y`.
pub fn integrate(f: &Field, grid: &Grid2D) -> f64 {
    grid.dx * column_integrals(f, grid).iter().sum::<f64>()
}

/// `||<y>^p f||_{L^2(Omega)}`.
pub fn norm_weighted(f: &Field, grid: &Grid2D, p: f64) -> f64 {
    norm_weighted_sq(f, grid, p).sqrt()
}

/// `||<y>^p f||^2_{L^2(Omega)}`.
pub fn norm_weighted_sq(f: &Field, grid: &Grid2D, p: f64) -> f64 {
    let w: Vec<f64> = grid.y_nodes.iter().map(|&y| weight(y, 2.0 * p)).collect();
    let mut wy = w;
    let n = wy.len();
    // fold the trapezoid end weights into the profile
    wy[0] *= 0.5;
    wy[n - 1] *= 0.5;
    let s: f64 = f
        .rows()
        .into_iter()
        .map(|c| c.iter().zip(&wy).map(|(v, w)| v * v * w).sum::<f64>())
        .sum();
    s * grid.dx * grid.dy
}

pub fn norm_l2(f: &Field, grid: &Grid2D) -> f64 {
    norm_weighted(f, grid, 0.0)
}

/// `sup |<y>^p f|` over the nodes.
pub fn sup_weighted(f: &Field, grid: &Grid2D, p: f64) -> f64 {
    let w: Vec<f64> = grid.y_nodes.iter().map(|&y| weight(y, p)).collect();
    f.rows()
        .into_iter()
        .flat_map(|c| c.into_iter().zip(&w).map(|(v, w)| (v * w).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

pub fn sup_abs(f: &Field) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `L^2(T)` norm of an `x`-profile, rectangle rule.
pub fn norm_x(p: &[f64], dx: f64) -> f64 {
    (dx * p.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Observed convergence order from errors at spacing `h` and `h / ratio`.
pub fn observed_order(e_coarse: f64, e_fine: f64, ratio: f64) -> f64 {
    (e_coarse / e_fine).ln() / ratio.ln()
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two nodes.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let h: Vec<f64> = (0..n - 1).map(|k| x[k + 1] - x[k]).collect();
        let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = del[0];
            d[1] = del[0];
            return Self { x, y, d };
        }
        for k in 1..n - 1 {
            if del[k - 1] * del[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
            }
        }
        d[0] = Self::end_slope(h[0], h[1], del[0], del[1]);
        d[n - 1] = Self::end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        Self { x, y, d }
    }

    /// Cubic Hermite interpolant with unlimited three-point slopes; third-order
    /// accurate for smooth data but not shape preserving.
    pub fn with_centered_slopes(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 3 && y.len() == n);
        let h: Vec<f64> = (0..n - 1).map(|k| x[k + 1] - x[k]).collect();
        let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            d[k] = (h[k] * del[k - 1] + h[k - 1] * del[k]) / (h[k - 1] + h[k]);
        }
        d[0] = ((2.0 * h[0] + h[1]) * del[0] - h[0] * del[1]) / (h[0] + h[1]);
        d[n - 1] = ((2.0 * h[n - 2] + h[n - 3]) * del[n - 2] - h[n - 2] * del[n - 3]) / (h[n - 2] + h[n - 3]);
        Self { x, y, d }
    }

    fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
        let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
        if d.signum() != del0.signum() {
            0.0
        } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
            3.0 * del0
        } else {
            d
        }
    }

    /// Evaluates at `t`, clamping to the end values outside the data range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(k) => return self.y[k],
            Err(k) => k - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }
}
