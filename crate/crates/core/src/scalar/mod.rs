//! Passive-scalar diagnostics: bounds, sum-to-one conservation, empirical
//! pdfs on space-time cells and the convex transport inequality.

mod transport;
mod young;

use serde::Serialize;
use thiserror::Error;

use crate::solver::SnapshotSeries;
use crate::spectral::{to_physical, SpectralError, SpectralField};

pub use transport::{
    convex_transport_residual, default_scalar_test_bank, ScalarTestFunction, TimeProfile, TransportRow, TRANSPORT_TOL,
};
pub use young::{
    weak_star_moment, write_moments_csv, write_youngs_csv, young_histogram, CellHistogram, CellSpec,
    ConvexTestFunction, YoungMeasureHistogram, DEFAULT_BINS, DEFAULT_MARGIN,
};

/// Overshoot above which a scalar is flagged as ringing.
pub const GIBBS_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ScalarError {
    #[error("series carries no scalars")]
    NoScalars,
    #[error("scalar index {index} out of range ({count} scalars)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("invalid cell partition: {0}")]
    InvalidCells(String),
    #[error("invalid bins: {0}")]
    InvalidBins(String),
    #[error("{name} is undefined on [{lo}, {hi}]")]
    UndefinedBeta { name: String, lo: f64, hi: f64 },
    #[error("sampled function is not convex near bin {bin} (second difference {value:.3e})")]
    NotConvex { bin: usize, value: f64 },
    #[error("test function {name} takes negative values (min {min:.3e})")]
    NegativeTestFunction { name: String, min: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Species count, diffusivities and Schmidt numbers of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarBank {
    pub count: usize,
    pub diffusivities: Vec<f64>,
    /// `μ₀/μᵢ`.
    pub schmidt: Vec<f64>,
}

impl ScalarBank {
    pub fn of(series: &SnapshotSeries) -> Self {
        Self {
            count: series.scalar_diffusivities.len(),
            diffusivities: series.scalar_diffusivities.clone(),
            schmidt: series.scalar_diffusivities.iter().map(|m| series.viscosity / m).collect(),
        }
    }
}

/// Spatial extremes of one scalar over a series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarExtremes {
    pub scalar_index: usize,
    pub times: Vec<f64>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub global_min: f64,
    pub global_max: f64,
    /// `max(−min, max − 1, 0)` over the whole series.
    pub overshoot: f64,
    /// Overshoot above [`GIBBS_THRESHOLD`]. Values are reported, never clipped.
    pub gibbs: bool,
}

pub(crate) fn check_index(series: &SnapshotSeries, index: usize) -> Result<(), ScalarError> {
    let count = series.scalar_diffusivities.len();
    if count == 0 {
        return Err(ScalarError::NoScalars);
    }
    if index >= count {
        return Err(ScalarError::IndexOutOfRange { index, count });
    }
    Ok(())
}

/// Real-space samples of scalar `index` at every snapshot.
pub(crate) fn scalar_samples(series: &SnapshotSeries, index: usize) -> Vec<Vec<f64>> {
    series
        .snapshots
        .iter()
        .map(|s| to_physical(&s.scalars[index]).into_components().swap_remove(0))
        .collect()
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

/// Per-snapshot extremes of every scalar. Empty when the run has none.
pub fn maximum_principle_check(series: &SnapshotSeries) -> Vec<ScalarExtremes> {
    (0..series.scalar_diffusivities.len())
        .map(|i| {
            let (mins, maxs): (Vec<f64>, Vec<f64>) =
                scalar_samples(series, i).iter().map(|v| min_max(v)).unzip();
            let global_min = mins.iter().copied().fold(f64::INFINITY, f64::min);
            let global_max = maxs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let overshoot = (-global_min).max(global_max - 1.0).max(0.0);
            ScalarExtremes {
                scalar_index: i,
                times: series.times(),
                mins,
                maxs,
                global_min,
                global_max,
                overshoot,
                gibbs: overshoot > GIBBS_THRESHOLD,
            }
        })
        .collect()
}

/// `max_x |Σᵢ χᵢ − 1|` per snapshot.
pub fn sum_to_one_defect(series: &SnapshotSeries) -> Result<Vec<f64>, ScalarError> {
    if series.scalar_diffusivities.is_empty() {
        return Err(ScalarError::NoScalars);
    }
    Ok(series
        .snapshots
        .iter()
        .map(|s| {
            let total = s.scalars[1..].iter().fold(s.scalars[0].clone(), |acc, c| acc.add(c));
            let phys = to_physical(&total);
            phys.component(0).iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
        })
        .collect())
}

/// `∫χᵢ dx` per snapshot for each scalar.
pub fn scalar_means(series: &SnapshotSeries) -> Vec<Vec<f64>> {
    let vol = series.grid.volume();
    (0..series.scalar_diffusivities.len())
        .map(|i| series.snapshots.iter().map(|s| mean_mode(&s.scalars[i]) * vol).collect())
        .collect()
}

fn mean_mode(f: &SpectralField) -> f64 {
    f.component(0)[0].re
}
