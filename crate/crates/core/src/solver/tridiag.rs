//! Tridiagonal solves for the implicit diffusion step.

/// Thomas algorithm for `lower[j] x[j-1] + diag[j] x[j] + upper[j] x[j+1] = rhs[j]`.
///
/// `lower[0]` and `upper[n-1]` are ignored. The solution overwrites `rhs`;
/// `scratch` must have length `n`. The matrices assembled here are strictly
/// diagonally dominant, so no pivoting is needed.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = rhs.len();
    debug_assert!(lower.len() == n && diag.len() == n && upper.len() == n && scratch.len() == n);
    if n == 0 {
        return;
    }
    let mut beta = diag[0];
    rhs[0] /= beta;
    for j in 1..n {
        scratch[j] = upper[j - 1] / beta;
        beta = diag[j] - lower[j] * scratch[j];
        rhs[j] = (rhs[j] - lower[j] * rhs[j - 1]) / beta;
    }
    for j in (0..n - 1).rev() {
        rhs[j] -= scratch[j + 1] * rhs[j + 1];
    }
}

/// Boundary treatment at the wall for one unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallCondition {
    /// Value prescribed (zero for the velocity perturbation).
    Dirichlet,
    /// Zero normal derivative, imposed through a mirrored ghost node.
    Neumann,
}

/// `I - tau * (nu d_y^2 - shift)` on one column with a wall condition at
/// `j = 0` and a Dirichlet row at the top. `shift` adds a non-negative
/// constant to the operator on non-Dirichlet rows (Fourier modes of
/// `-eps d_x^2`).
#[derive(Debug, Clone)]
pub struct ColumnOperator {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ColumnOperator {
    pub fn new(ny: usize, dy: f64, nu: f64, tau: f64, shift: f64, wall: WallCondition) -> Self {
        Self::with_coefficients(&vec![nu; ny], dy, tau, shift, wall)
    }

    /// Variable diffusivity `nu[j]` (frozen coefficients `nu_j f_yy`).
    pub fn with_coefficients(nu: &[f64], dy: f64, tau: f64, shift: f64, wall: WallCondition) -> Self {
        let ny = nu.len();
        let r: Vec<f64> = nu.iter().map(|n| tau * n / (dy * dy)).collect();
        let mut lower: Vec<f64> = r.iter().map(|r| -r).collect();
        let mut diag: Vec<f64> = r.iter().map(|r| 1.0 + 2.0 * r + tau * shift).collect();
        let mut upper = lower.clone();
        match wall {
            WallCondition::Dirichlet => {
                diag[0] = 1.0;
                upper[0] = 0.0;
            }
            WallCondition::Neumann => {
                upper[0] = -2.0 * r[0];
            }
        }
        lower[0] = 0.0;
        diag[ny - 1] = 1.0;
        lower[ny - 1] = 0.0;
        upper[ny - 1] = 0.0;
        Self { lower, diag, upper }
    }

    pub fn solve(&self, rhs: &mut [f64], scratch: &mut [f64]) {
        thomas(&self.lower, &self.diag, &self.upper, rhs, scratch);
    }
}

/// `nu d_y^2 f` with the ghost-node wall row used by [`ColumnOperator`];
/// Dirichlet rows return zero.
pub fn apply_diffusion(f: &[f64], dy: f64, nu: f64, wall: WallCondition, out: &mut [f64]) {
    apply_variable_diffusion(f, dy, |_| nu, wall, out);
}

/// `nu(j) d_y^2 f` with the same boundary rows as [`apply_diffusion`].
pub fn apply_variable_diffusion(
    f: &[f64],
    dy: f64,
    nu: impl Fn(usize) -> f64,
    wall: WallCondition,
    out: &mut [f64],
) {
    let n = f.len();
    let inv = 1.0 / (dy * dy);
    out[0] = match wall {
        WallCondition::Dirichlet => 0.0,
        WallCondition::Neumann => 2.0 * nu(0) * inv * (f[1] - f[0]),
    };
    for j in 1..n - 1 {
        out[j] = nu(j) * inv * (f[j - 1] - 2.0 * f[j] + f[j + 1]);
    }
    out[n - 1] = 0.0;
}
