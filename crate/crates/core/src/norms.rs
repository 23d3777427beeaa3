//! Weighted Sobolev norms with the weight `<y>^{l+k}` growing with the number
//! `k` of normal derivatives.

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::ops::{self, Field};
use serde::{Deserialize, Serialize};
use std::fmt;

/// `D^alpha = d_t^bt d_x^bx d_y^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MultiIndex {
    pub bt: usize,
    pub bx: usize,
    pub k: usize,
}

impl MultiIndex {
    pub const fn new(bt: usize, bx: usize, k: usize) -> Self {
        Self { bt, bx, k }
    }

    /// Purely tangential spatial index `d_x^bx`.
    pub const fn tangential(bx: usize) -> Self {
        Self { bt: 0, bx, k: 0 }
    }

    pub fn order(&self) -> usize {
        self.bt + self.bx + self.k
    }

    /// All spatial indices (`bt = 0`) with `bx + k <= m`.
    pub fn spatial_up_to(m: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for total in 0..=m {
            for k in 0..=total {
                out.push(MultiIndex::new(0, total - k, k));
            }
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.bt, self.bx, self.k)
    }
}

/// Spatial derivative `d_x^bx d_y^k f` (the `bt` component is ignored).
pub fn spatial_derivative(f: &Field, grid: &Grid2D, a: MultiIndex) -> Field {
    let mut out = ops::dx_pow(f, grid, a.bx);
    for _ in 0..a.k {
        out = ops::dy(&out, grid);
    }
    out
}

/// Largest order accepted by [`weighted_norm`].
pub const MAX_NORM_ORDER: usize = 4;

/// One prior time level for backward differences.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub prev: &'a [&'a Field],
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub l: f64,
    pub m: usize,
    pub include_dt: bool,
    /// `(alpha, ||<y>^{l+k} D^alpha f||)` summed over all fields.
    pub contributions: Vec<(MultiIndex, f64)>,
    pub total: f64,
}

/// `sqrt(sum_{|alpha| <= m} ||<y>^{l+k} D^alpha f||^2)` summed over `fields`.
///
/// Without history only spatial indices enter. With history, indices with
/// `bt = 1` use a first-order backward difference.
pub fn weighted_norm(
    fields: &[&Field],
    grid: &Grid2D,
    l: f64,
    m: usize,
    history: Option<History<'_>>,
) -> Result<NormReport> {
    if m > MAX_NORM_ORDER {
        return Err(Error::IndexBudget {
            requested: m,
            max: MAX_NORM_ORDER,
        });
    }
    if let Some(h) = history {
        if h.prev.len() != fields.len() {
            return Err(Error::MissingHistory);
        }
    }
    let mut contributions = Vec::new();
    let mut total_sq = 0.0;
    for a in MultiIndex::spatial_up_to(m) {
        let sq: f64 = fields
            .iter()
            .map(|f| ops::norm_weighted_sq(&spatial_derivative(f, grid, a), grid, l + a.k as f64))
            .sum();
        total_sq += sq;
        contributions.push((a, sq.sqrt()));
    }
    if let Some(h) = history {
        if m >= 1 {
            let rates: Vec<Field> = fields
                .iter()
                .zip(h.prev)
                .map(|(f, p)| (*f - *p) / h.dt)
                .collect();
            for a in MultiIndex::spatial_up_to(m - 1) {
                let sq: f64 = rates
                    .iter()
                    .map(|f| {
                        ops::norm_weighted_sq(&spatial_derivative(f, grid, a), grid, l + a.k as f64)
                    })
                    .sum();
                total_sq += sq;
                contributions.push((MultiIndex::new(1, a.bx, a.k), sq.sqrt()));
            }
        }
    }
    Ok(NormReport {
        l,
        m,
        include_dt: history.is_some(),
        contributions,
        total: total_sq.sqrt(),
    })
}

/// Spatial `H^m_l`-type norm of one field.
pub fn hnorm(f: &Field, grid: &Grid2D, l: f64, m: usize) -> f64 {
    MultiIndex::spatial_up_to(m)
        .into_iter()
        .map(|a| ops::norm_weighted_sq(&spatial_derivative(f, grid, a), grid, l + a.k as f64))
        .sum::<f64>()
        .sqrt()
}
