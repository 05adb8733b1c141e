use rayon::prelude::*;
use serde::Serialize;

use super::quadrature::{linear_fit, trapezoid};
use super::DiagnosticsError;
use crate::solver::SnapshotSeries;
use crate::spectral::SpectralField;
use crate::util::par_sum;

/// Snapshot lag `m` with `Δt = m · spacing`.
pub(crate) fn lag_steps(series: &SnapshotSeries, dt: f64) -> Result<usize, DiagnosticsError> {
    let h = series.spacing();
    let m = (dt / h).round();
    let misaligned = DiagnosticsError::MisalignedLag { dt, spacing: h };
    if !(m >= 1.0) || (dt - m * h).abs() > 1e-9 * h {
        return Err(misaligned);
    }
    let m = m as usize;
    if m + 1 >= series.len() {
        return Err(DiagnosticsError::InvalidParameter(format!(
            "lag {dt} is not shorter than the series span {}",
            h * (series.len().saturating_sub(1)) as f64
        )));
    }
    Ok(m)
}

/// `∫|a − b|² dx` via Parseval.
pub(crate) fn l2_distance_sq(a: &SpectralField, b: &SpectralField) -> f64 {
    let vol = a.grid().volume();
    let s: f64 = a
        .components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| par_sum(x.len(), |i| (x[i] - y[i]).norm_sqr()))
        .sum();
    vol * s
}

/// `ω²(Δt) = ∫₀^{T−Δt} ∫ |u(t+Δt) − u(t)|² dx dt`.
pub fn time_modulus(series: &SnapshotSeries, dt: f64) -> Result<f64, DiagnosticsError> {
    let m = lag_steps(series, dt)?;
    let s = &series.snapshots;
    let d: Vec<f64> = (0..s.len() - m)
        .into_par_iter()
        .map(|n| l2_distance_sq(&s[n + m].velocity, &s[n].velocity))
        .collect();
    Ok(trapezoid(&d, series.spacing()))
}

/// Power-law fit of `ω²(Δt)` against the exponent floor `2α/(5+2α)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ModulusFit {
    Fitted {
        points: Vec<(f64, f64)>,
        slope: f64,
        intercept: f64,
        slope_stderr: f64,
        rms_residual: f64,
        floor: f64,
        /// `slope ≥ floor − slope_stderr`
        meets_floor: bool,
    },
    /// Some `ω²` is zero or the lags do not spread.
    Degenerate { points: Vec<(f64, f64)>, floor: f64, reason: String },
}

impl ModulusFit {
    pub fn floor(&self) -> f64 {
        match self {
            ModulusFit::Fitted { floor, .. } | ModulusFit::Degenerate { floor, .. } => *floor,
        }
    }

    pub fn slope(&self) -> Option<f64> {
        match self {
            ModulusFit::Fitted { slope, .. } => Some(*slope),
            ModulusFit::Degenerate { .. } => None,
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        match self {
            ModulusFit::Fitted { points, .. } | ModulusFit::Degenerate { points, .. } => points,
        }
    }
}

/// `2α/(5+2α)`
pub fn modulus_exponent_floor(alpha: f64) -> f64 {
    2.0 * alpha / (5.0 + 2.0 * alpha)
}

pub fn modulus_exponent_fit(series: &SnapshotSeries, lags: &[f64], alpha: f64) -> Result<ModulusFit, DiagnosticsError> {
    let mut distinct: Vec<f64> = lags.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    if distinct.len() < 3 {
        return Err(DiagnosticsError::TooFewPoints(distinct.len()));
    }
    let points = distinct
        .iter()
        .map(|&dt| time_modulus(series, dt).map(|w| (dt, w)))
        .collect::<Result<Vec<_>, _>>()?;
    let floor = modulus_exponent_floor(alpha);
    if points.iter().any(|p| !(p.1 > 0.0)) {
        return Ok(ModulusFit::Degenerate { points, floor, reason: "omega^2 vanishes at some lag".into() });
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    match linear_fit(&x, &y) {
        Some(f) => Ok(ModulusFit::Fitted {
            points,
            slope: f.slope,
            intercept: f.intercept,
            slope_stderr: f.slope_stderr,
            rms_residual: f.rms_residual,
            floor,
            meets_floor: f.slope >= floor - f.slope_stderr,
        }),
        None => Ok(ModulusFit::Degenerate { points, floor, reason: "lags do not spread".into() }),
    }
}
