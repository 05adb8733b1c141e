use rayon::prelude::*;
use serde::Serialize;

use super::quadrature::{trapezoid, trapezoid_weights};
use super::spectrum::k41w_statistic;
use super::DiagnosticsError;
use crate::solver::SnapshotSeries;
use crate::spectral::{fractional_norm_sq, to_physical};
use crate::util::par_sum;

/// `‖u‖²_{L²(0,T;H^α)}` and its split at `k*`, all in physical
/// normalization (`|𝕋| Σ |𝐤|^{2α}|û|²` integrated in time).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevReport {
    pub alpha: f64,
    pub k_star: usize,
    pub total: f64,
    /// Contribution of modes with `|𝐤| < k*`.
    pub low: f64,
    /// Contribution of modes with `|𝐤| ≥ k*`.
    pub high: f64,
    /// `(k*·2π/P)^{2α} ∫₀ᵀ ‖u‖² dt ≥ low`.
    pub low_bound: f64,
    /// `|𝕋| C_T Σ_{|𝐤| ≥ k*} |𝐤|^{2α−3−β}` with the measured `C_T`, when a
    /// tail exponent is supplied.
    pub high_bound: Option<f64>,
    pub beta: Option<f64>,
    /// Set when `α ≥ β/2`, outside the range where the tail sum converges
    /// as the grid is refined.
    pub alpha_above_half_beta: bool,
}

pub fn sobolev_bound(
    series: &SnapshotSeries,
    alpha: f64,
    k_star: usize,
    beta: Option<f64>,
) -> Result<SobolevReport, DiagnosticsError> {
    if !(alpha >= 0.0) {
        return Err(DiagnosticsError::InvalidParameter(format!("alpha must be non-negative, got {alpha}")));
    }
    let g = series.grid;
    let vol = g.volume();
    let ks2 = (k_star * k_star) as i64;
    let high_mode = |idx: usize| g.mode(idx).iter().map(|v| v * v).sum::<i64>() >= ks2;
    let weights: Vec<f64> = (0..g.len()).into_par_iter().map(|i| g.k_squared(i).powf(alpha)).collect();
    let mut low_t = Vec::with_capacity(series.len());
    let mut high_t = Vec::with_capacity(series.len());
    let mut l2_t = Vec::with_capacity(series.len());
    for u in series.velocities() {
        let (mut lo, mut hi) = (0.0, 0.0);
        for c in u.components() {
            lo += par_sum(c.len(), |i| if high_mode(i) { 0.0 } else { weights[i] * c[i].norm_sqr() });
            hi += par_sum(c.len(), |i| if high_mode(i) { weights[i] * c[i].norm_sqr() } else { 0.0 });
        }
        low_t.push(vol * lo);
        high_t.push(vol * hi);
        l2_t.push(fractional_norm_sq(u, 0.0)?);
    }
    let h = series.spacing();
    let low = trapezoid(&low_t, h);
    let high = trapezoid(&high_t, h);
    let low_bound = (k_star as f64 * g.k0()).powf(2.0 * alpha) * trapezoid(&l2_t, h);
    let high_bound = match beta {
        Some(b) => {
            let c_t = k41w_statistic(series, b, k_star)?.supremum;
            let tail = par_sum(g.len(), |i| {
                if g.is_dealiased_mode(i) && high_mode(i) {
                    g.k_squared(i).sqrt().powf(2.0 * alpha - 3.0 - b)
                } else {
                    0.0
                }
            });
            Some(vol * c_t * tail)
        }
        None => None,
    };
    if let Some(b) = beta {
        if alpha >= 0.5 * b {
            log::warn!("alpha = {alpha} is not below beta/2 = {}", 0.5 * b);
        }
    }
    Ok(SobolevReport {
        alpha,
        k_star,
        total: low + high,
        low,
        high,
        low_bound,
        high_bound,
        beta,
        alpha_above_half_beta: beta.is_some_and(|b| alpha >= 0.5 * b),
    })
}

/// Space-time `L^q` norm `(∫₀ᵀ∫ |u|^q dx dt)^{1/q}`: grid midpoint rule in
/// space, trapezoid in time.
pub fn lq_norm(series: &SnapshotSeries, q: f64) -> Result<f64, DiagnosticsError> {
    if !(q >= 1.0) {
        return Err(DiagnosticsError::InvalidParameter(format!("q must be at least 1, got {q}")));
    }
    let cell = series.grid.cell_volume();
    let per_snapshot: Vec<f64> = series
        .velocities()
        .map(|u| {
            let mag = to_physical(u).magnitude();
            cell * par_sum(mag.len(), |i| mag[i].powf(q))
        })
        .collect();
    let w = trapezoid_weights(per_snapshot.len(), series.spacing());
    let integral: f64 = per_snapshot.iter().zip(&w).map(|(a, b)| a * b).sum();
    Ok(integral.powf(1.0 / q))
}
