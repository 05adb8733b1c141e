//! Spectra, Kolmogorov-type statistics, fractional Sobolev bounds,
//! time-equicontinuity moduli and the mollified weak-form decomposition,
//! all computed from a [`SnapshotSeries`].

mod modulus;
pub mod quadrature;
mod sobolev;
mod spectrum;
mod trace;

use serde::Serialize;
use thiserror::Error;

use crate::solver::{energy_budget, BudgetRow, SnapshotSeries};
use crate::spectral::SpectralError;

pub(crate) use modulus::l2_distance_sq;
pub use modulus::{modulus_exponent_fit, modulus_exponent_floor, time_modulus, ModulusFit};
pub use sobolev::{lq_norm, sobolev_bound, SobolevReport};
pub use spectrum::{
    k41_mode_statistic, k41_statistic, k41w_statistic, max_shell, series_spectra, shell_spectrum,
    spectrum_slope_fit, time_integrated_modes, time_integrated_spectrum, K41Row, K41Table, ModeRow,
    ModeStatistic, ShellSpectrum, SlopeFit, TAIL_NOISE,
};
pub use trace::{proof_trace, JTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("k* = {k_star} must lie in 1..={max} (resolved shells)")]
    KStarUnresolved { k_star: usize, max: usize },
    #[error("tail exponent beta must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("lag {dt} is not a positive multiple of the snapshot spacing {spacing}")]
    MisalignedLag { dt: f64, spacing: f64 },
    #[error("need at least 3 distinct lags, got {0}")]
    TooFewPoints(usize),
    #[error("shell range {k_lo}..={k_hi} has fewer than 3 shells with positive energy")]
    EmptyRange { k_lo: usize, k_hi: usize },
    #[error("{0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Parameters of a diagnostics pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsParams {
    pub alpha: f64,
    pub beta: f64,
    pub k_star: usize,
    pub q: f64,
    /// Lags for the modulus table and fit.
    pub lags: Vec<f64>,
    /// Lags for the weak-form decomposition (crossed with `deltas`).
    pub trace_lags: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Shell range for the spectral slope fit.
    pub slope_range: Option<(usize, usize)>,
}

impl Default for DiagnosticsParams {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            beta: 2.0 / 3.0,
            k_star: 2,
            q: 3.0,
            lags: Vec::new(),
            trace_lags: Vec::new(),
            deltas: Vec::new(),
            slope_range: None,
        }
    }
}

/// Series metadata recorded with every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesInfo {
    pub n: usize,
    pub period: f64,
    pub viscosity: f64,
    pub dt: f64,
    pub stride: usize,
    pub snapshot_spacing: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub snapshots: usize,
}

impl SeriesInfo {
    pub fn of(series: &SnapshotSeries) -> Self {
        Self {
            n: series.grid.n(),
            period: series.grid.period(),
            viscosity: series.viscosity,
            dt: series.dt,
            stride: series.stride,
            snapshot_spacing: series.spacing(),
            t_start: series.snapshots.first().map_or(0.0, |s| s.time),
            t_end: series.snapshots.last().map_or(0.0, |s| s.time),
            snapshots: series.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LqNorm {
    pub q: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusRow {
    pub dt: f64,
    pub omega2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub params: DiagnosticsParams,
    pub series: SeriesInfo,
    pub spectra: Vec<ShellSpectrum>,
    pub time_integrated_spectrum: Vec<f64>,
    pub k41_shell: K41Table,
    /// Per-wavevector variant; rows are omitted from serialized output.
    pub k41_mode: ModeStatistic,
    pub k41w: ModeStatistic,
    pub sobolev: SobolevReport,
    pub modulus: Vec<ModulusRow>,
    pub modulus_fit: Option<ModulusFit>,
    pub modulus_floor: f64,
    pub jtrace: Vec<JTrace>,
    pub energy_budget: Vec<BudgetRow>,
    pub lq_norm: LqNorm,
    /// `(t, ε(t))` at every step.
    pub dissipation: Vec<(f64, f64)>,
    pub slope_fit: Option<SlopeFit>,
}

impl DiagnosticsReport {
    /// Report with empty tables, for a series that has not been analysed.
    pub fn empty(params: DiagnosticsParams, series: SeriesInfo) -> Self {
        let stat = |exponent| ModeStatistic {
            exponent,
            k_star: params.k_star,
            supremum: 0.0,
            argmax: [0; 3],
            rows: Vec::new(),
        };
        Self {
            k41_shell: K41Table {
                k_star: params.k_star,
                rows: Vec::new(),
                supremum: 0.0,
                argmax_shell: params.k_star,
                non_increasing_tail: true,
            },
            k41_mode: stat(5.0 / 3.0),
            k41w: stat(3.0 + params.beta),
            sobolev: SobolevReport {
                alpha: params.alpha,
                k_star: params.k_star,
                total: 0.0,
                low: 0.0,
                high: 0.0,
                low_bound: 0.0,
                high_bound: None,
                beta: Some(params.beta),
                alpha_above_half_beta: params.alpha >= 0.5 * params.beta,
            },
            spectra: Vec::new(),
            time_integrated_spectrum: Vec::new(),
            modulus: Vec::new(),
            modulus_fit: None,
            modulus_floor: modulus_exponent_floor(params.alpha),
            jtrace: Vec::new(),
            energy_budget: Vec::new(),
            lq_norm: LqNorm { q: params.q, value: 0.0 },
            dissipation: Vec::new(),
            slope_fit: None,
            params,
            series,
        }
    }
}

/// Run every diagnostic on a series.
pub fn diagnose(series: &SnapshotSeries, params: &DiagnosticsParams) -> Result<DiagnosticsReport, DiagnosticsError> {
    let modulus = params
        .lags
        .iter()
        .map(|&dt| time_modulus(series, dt).map(|omega2| ModulusRow { dt, omega2 }))
        .collect::<Result<Vec<_>, _>>()?;
    let modulus_fit = if params.lags.len() >= 3 {
        Some(modulus_exponent_fit(series, &params.lags, params.alpha)?)
    } else {
        None
    };
    let mut jtrace = Vec::new();
    for &dt in &params.trace_lags {
        for &delta in &params.deltas {
            jtrace.push(proof_trace(series, dt, delta, params.alpha)?);
        }
    }
    let time_integrated = time_integrated_spectrum(series);
    let slope_fit = match params.slope_range {
        Some((lo, hi)) => {
            let eps = series.steps.iter().map(|r| r.dissipation_rate).sum::<f64>() / series.steps.len().max(1) as f64;
            let eps = if eps > 0.0 { eps } else { 1.0 };
            match spectrum_slope_fit(&time_integrated, lo, hi, series.grid.k0(), eps) {
                Ok(f) => Some(f),
                Err(e) => {
                    log::warn!("spectral slope fit skipped: {e}");
                    None
                }
            }
        }
        None => None,
    };
    let budget = energy_budget(series);
    Ok(DiagnosticsReport {
        params: params.clone(),
        series: SeriesInfo::of(series),
        spectra: series_spectra(series),
        time_integrated_spectrum: time_integrated,
        k41_shell: k41_statistic(series, params.k_star)?,
        k41_mode: k41_mode_statistic(series, params.k_star)?,
        k41w: k41w_statistic(series, params.beta, params.k_star)?,
        sobolev: sobolev_bound(series, params.alpha, params.k_star, Some(params.beta))?,
        modulus,
        modulus_fit,
        modulus_floor: modulus_exponent_floor(params.alpha),
        jtrace,
        energy_budget: budget.rows,
        lq_norm: LqNorm { q: params.q, value: lq_norm(series, params.q)? },
        dissipation: budget.dissipation_rate,
        slope_fit,
    })
}
