use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::quadrature::{linear_fit, trapezoid_weights, LinearFit};
use super::DiagnosticsError;
use crate::solver::SnapshotSeries;
use crate::spectral::{SpectralField, TorusGrid};

/// Energy per integer wavenumber shell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellSpectrum {
    pub time: f64,
    /// `E(k) = ½ Σ_{shell k} |û|²` for `k = 0..=k_max`.
    pub energy: Vec<f64>,
}

impl ShellSpectrum {
    /// `q(k) = E(k) / (4πk²)` with `k` the physical shell wavenumber; `q(0)`
    /// is reported as zero.
    pub fn density(&self, grid: TorusGrid) -> Vec<f64> {
        self.energy
            .iter()
            .enumerate()
            .map(|(k, e)| {
                if k == 0 {
                    0.0
                } else {
                    let kp = k as f64 * grid.k0();
                    e / (4.0 * PI * kp * kp)
                }
            })
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.energy.iter().sum()
    }

    pub fn k_max(&self) -> usize {
        self.energy.len().saturating_sub(1)
    }
}

/// Largest shell index on the grid.
pub fn max_shell(grid: TorusGrid) -> usize {
    let h = (grid.n() / 2) as f64;
    (3.0 * h * h).sqrt().round() as usize
}

fn mode_energy(u: &SpectralField, idx: usize) -> f64 {
    u.components().iter().map(|c| c[idx].norm_sqr()).sum()
}

pub fn shell_spectrum(u: &SpectralField) -> ShellSpectrum {
    let g = u.grid();
    let mut energy = vec![0.0; max_shell(g) + 1];
    // accumulate in index order so the result does not depend on threading
    for idx in 0..g.len() {
        energy[g.shell(idx)] += 0.5 * mode_energy(u, idx);
    }
    ShellSpectrum { time: 0.0, energy }
}

/// Shell spectra of every snapshot.
pub fn series_spectra(series: &SnapshotSeries) -> Vec<ShellSpectrum> {
    series
        .snapshots
        .par_iter()
        .map(|s| ShellSpectrum { time: s.time, ..shell_spectrum(&s.velocity) })
        .collect()
}

/// Per-shell `∫₀ᵀ E(t,k) dt`, trapezoid over snapshots.
pub fn time_integrated_spectrum(series: &SnapshotSeries) -> Vec<f64> {
    let spectra = series_spectra(series);
    let w = trapezoid_weights(spectra.len(), series.spacing());
    let mut out = vec![0.0; max_shell(series.grid) + 1];
    for (s, wi) in spectra.iter().zip(&w) {
        for (o, e) in out.iter_mut().zip(&s.energy) {
            *o += wi * e;
        }
    }
    out
}

/// Per-mode `∫₀ᵀ |û(t,𝐤)|² dt`, trapezoid over snapshots.
pub fn time_integrated_modes(series: &SnapshotSeries) -> Vec<f64> {
    let g = series.grid;
    let w = trapezoid_weights(series.len(), series.spacing());
    (0..g.len())
        .into_par_iter()
        .map(|idx| series.snapshots.iter().zip(&w).map(|(s, wi)| wi * mode_energy(&s.velocity, idx)).sum())
        .collect()
}

/// Relative slack allowed when flagging a non-increasing tail.
pub const TAIL_NOISE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct K41Row {
    /// Shell index.
    pub shell: usize,
    /// Physical wavenumber `shell · 2π/P`.
    pub k: f64,
    pub integral: f64,
    /// `k^{5/3} ∫₀ᵀ E dt`
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct K41Table {
    pub k_star: usize,
    pub rows: Vec<K41Row>,
    /// Measured `C_T`: supremum of `weighted` over shells `≥ k*`.
    pub supremum: f64,
    pub argmax_shell: usize,
    /// Whether `weighted` never grows by more than [`TAIL_NOISE`] from one
    /// shell to the next beyond `k*`.
    pub non_increasing_tail: bool,
}

fn check_k_star(grid: TorusGrid, k_star: usize) -> Result<(), DiagnosticsError> {
    let max = grid.dealias_cutoff() as usize;
    if k_star == 0 || k_star > max {
        return Err(DiagnosticsError::KStarUnresolved { k_star, max });
    }
    Ok(())
}

/// Shell-averaged statistic `k^{5/3} ∫₀ᵀ E(t,k) dt` for resolved shells.
pub fn k41_statistic(series: &SnapshotSeries, k_star: usize) -> Result<K41Table, DiagnosticsError> {
    let g = series.grid;
    check_k_star(g, k_star)?;
    let integ = time_integrated_spectrum(series);
    let rows: Vec<K41Row> = (1..=g.dealias_cutoff() as usize)
        .map(|shell| {
            let k = shell as f64 * g.k0();
            K41Row { shell, k, integral: integ[shell], weighted: k.powf(5.0 / 3.0) * integ[shell] }
        })
        .collect();
    let tail: Vec<&K41Row> = rows.iter().filter(|r| r.shell >= k_star).collect();
    let (argmax_shell, supremum) = tail
        .iter()
        .fold((k_star, f64::NEG_INFINITY), |acc, r| if r.weighted > acc.1 { (r.shell, r.weighted) } else { acc });
    let non_increasing_tail = tail.windows(2).all(|w| w[1].weighted <= w[0].weighted * (1.0 + TAIL_NOISE));
    Ok(K41Table { k_star, rows, supremum, argmax_shell, non_increasing_tail })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRow {
    pub mode: [i64; 3],
    /// Physical `|𝐤|`.
    pub k: f64,
    pub integral: f64,
    pub weighted: f64,
}

/// Supremum of a per-mode weighted statistic with its full table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeStatistic {
    /// Weight exponent: `|𝐤|^exponent ∫₀ᵀ m(t,𝐤) dt`.
    pub exponent: f64,
    pub k_star: usize,
    pub supremum: f64,
    pub argmax: [i64; 3],
    #[serde(skip_serializing)]
    pub rows: Vec<ModeRow>,
}

fn mode_statistic(
    series: &SnapshotSeries,
    k_star: usize,
    exponent: f64,
    scale: f64,
) -> Result<ModeStatistic, DiagnosticsError> {
    let g = series.grid;
    check_k_star(g, k_star)?;
    let integ = time_integrated_modes(series);
    let ks2 = (k_star * k_star) as i64;
    let rows: Vec<ModeRow> = (0..g.len())
        .filter(|&idx| {
            let m = g.mode(idx);
            g.is_dealiased_mode(idx) && m.iter().map(|v| v * v).sum::<i64>() >= ks2
        })
        .map(|idx| {
            let k = g.k_squared(idx).sqrt();
            let integral = scale * integ[idx];
            ModeRow { mode: g.mode(idx), k, integral, weighted: k.powf(exponent) * integral }
        })
        .collect();
    let (argmax, supremum) = rows
        .iter()
        .fold(([0; 3], f64::NEG_INFINITY), |acc, r| if r.weighted > acc.1 { (r.mode, r.weighted) } else { acc });
    Ok(ModeStatistic { exponent, k_star, supremum: supremum.max(0.0), argmax, rows })
}

/// Weak statistic: `sup_{|𝐤| ≥ k*} |𝐤|^{3+β} ∫₀ᵀ |û(t,𝐤)|² dt`, with `k*`
/// in lattice units.
pub fn k41w_statistic(series: &SnapshotSeries, beta: f64, k_star: usize) -> Result<ModeStatistic, DiagnosticsError> {
    if !(beta > 0.0) {
        return Err(DiagnosticsError::NonPositiveBeta(beta));
    }
    mode_statistic(series, k_star, 3.0 + beta, 1.0)
}

/// Per-wavevector form of the shell statistic:
/// `sup_{|𝐤| ≥ k*} |𝐤|^{5/3} ∫₀ᵀ ½|û(t,𝐤)|² dt`.
pub fn k41_mode_statistic(series: &SnapshotSeries, k_star: usize) -> Result<ModeStatistic, DiagnosticsError> {
    mode_statistic(series, k_star, 5.0 / 3.0, 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub k_lo: usize,
    pub k_hi: usize,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub rms_residual: f64,
    /// `(k, ε^{-2/3} k^{5/3} E(k))` over the fitted range.
    pub compensated: Vec<(f64, f64)>,
    /// Max over min of the compensated spectrum; 1 when perfectly flat.
    pub flatness: f64,
}

/// Log-log least-squares slope of `E(k)` (indexed by shell) over shells
/// `k_lo..=k_hi`; `k` is the shell index times `k_unit`.
pub fn spectrum_slope_fit(
    energy: &[f64],
    k_lo: usize,
    k_hi: usize,
    k_unit: f64,
    epsilon: f64,
) -> Result<SlopeFit, DiagnosticsError> {
    if k_lo == 0 || k_hi < k_lo || k_hi >= energy.len() {
        return Err(DiagnosticsError::EmptyRange { k_lo, k_hi });
    }
    let pts: Vec<(f64, f64)> =
        (k_lo..=k_hi).filter(|&k| energy[k] > 0.0).map(|k| (k as f64 * k_unit, energy[k])).collect();
    if pts.len() < 3 {
        return Err(DiagnosticsError::EmptyRange { k_lo, k_hi });
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let LinearFit { slope, intercept, slope_stderr, rms_residual } =
        linear_fit(&x, &y).ok_or(DiagnosticsError::EmptyRange { k_lo, k_hi })?;
    let compensated: Vec<(f64, f64)> =
        pts.iter().map(|&(k, e)| (k, epsilon.powf(-2.0 / 3.0) * k.powf(5.0 / 3.0) * e)).collect();
    let max = compensated.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let min = compensated.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    Ok(SlopeFit { k_lo, k_hi, slope, intercept, slope_stderr, rms_residual, compensated, flatness: max / min })
}
