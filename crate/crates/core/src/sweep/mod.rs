//! Decreasing-viscosity families of otherwise identical runs, with
//! pairwise Cauchy distances, weak Euler residuals and limit energy checks.

mod weak;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::quadrature::trapezoid_weights;
use crate::diagnostics::{diagnose, l2_distance_sq, DiagnosticsError, DiagnosticsParams, DiagnosticsReport};
use crate::solver::{run, SimConfig, SnapshotSeries, SolverError};
use crate::spectral::to_physical;
use crate::util::par_sum;

pub use weak::{
    default_test_bank, euler_weak_residual, limit_energy_check, EnergyMargins, TestFunction, TimeBump,
    WeakResidual,
};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    InvalidConfig(String),
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),
    #[error("sweep member mu = {mu} failed after {} completed members", completed.len())]
    Partial {
        mu: f64,
        #[source]
        source: Box<SweepError>,
        completed: Vec<MemberResult>,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Shared configuration; its viscosity is replaced per member.
    pub base: SimConfig,
    /// `μ₁ > μ₂ > … > μ_J > 0`.
    pub ladder: Vec<f64>,
    pub params: DiagnosticsParams,
    /// Resolution heuristic constant in `μ ≥ c (P/N)^{4/3}`.
    pub resolution_c: f64,
    /// Permit repeated ladder values, for determinism checks.
    pub allow_degenerate: bool,
}

impl SweepConfig {
    pub fn new(base: SimConfig, ladder: Vec<f64>, params: DiagnosticsParams) -> Self {
        Self { base, ladder, params, resolution_c: 1.0, allow_degenerate: false }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.ladder.is_empty() {
            return Err(SweepError::InvalidConfig("viscosity ladder is empty".into()));
        }
        if self.ladder.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(SweepError::InvalidConfig("ladder values must be positive".into()));
        }
        let ok = self.ladder.windows(2).all(|w| if self.allow_degenerate { w[1] <= w[0] } else { w[1] < w[0] });
        if !ok {
            return Err(SweepError::InvalidConfig("ladder must decrease".into()));
        }
        if !(self.resolution_c > 0.0) {
            return Err(SweepError::InvalidConfig("resolution constant must be positive".into()));
        }
        self.member_config(self.ladder[0]).validate()?;
        Ok(())
    }

    pub fn member_config(&self, mu: f64) -> SimConfig {
        SimConfig { viscosity: mu, ..self.base.clone() }
    }

    /// `c (P/N)^{4/3}`
    pub fn resolution_floor(&self) -> f64 {
        let g = self.base.grid;
        self.resolution_c * (g.period() / g.n() as f64).powf(4.0 / 3.0)
    }
}

/// One completed member.
#[derive(Debug, Clone)]
pub struct MemberResult {
    pub viscosity: f64,
    pub series: SnapshotSeries,
    pub report: DiagnosticsReport,
    pub euler_residuals: Vec<WeakResidual>,
    pub energy: EnergyMargins,
    pub under_resolved: bool,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub ladder: Vec<f64>,
    pub members: Vec<MemberResult>,
    /// `‖u^{μᵢ} − u^{μⱼ}‖_{L²([0,T)×𝕋)}`
    pub cauchy_l2: Vec<Vec<f64>>,
    /// Same in `L^q`.
    pub cauchy_lq: Vec<Vec<f64>>,
    pub q: f64,
    /// Whether `D(i, i+1)` strictly decreases along the ladder.
    pub adjacent_decreasing: bool,
    /// Index of the finest member, the stand-in for the limit.
    pub reference: usize,
}

/// Summary without snapshot data, suitable for serialization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub ladder: Vec<f64>,
    pub q: f64,
    pub cauchy_l2: Vec<Vec<f64>>,
    pub cauchy_lq: Vec<Vec<f64>>,
    pub adjacent_decreasing: bool,
    pub reference: usize,
    pub under_resolved: Vec<bool>,
    pub resolution_floor: f64,
    pub k41w: Vec<f64>,
    pub sobolev: Vec<f64>,
    pub euler_residuals: Vec<Vec<WeakResidual>>,
    pub energy_margins: Vec<EnergyMargins>,
}

impl SweepResult {
    pub fn summary(&self, resolution_floor: f64) -> SweepSummary {
        SweepSummary {
            ladder: self.ladder.clone(),
            q: self.q,
            cauchy_l2: self.cauchy_l2.clone(),
            cauchy_lq: self.cauchy_lq.clone(),
            adjacent_decreasing: self.adjacent_decreasing,
            reference: self.reference,
            under_resolved: self.members.iter().map(|m| m.under_resolved).collect(),
            resolution_floor,
            k41w: self.members.iter().map(|m| m.report.k41w.supremum).collect(),
            sobolev: self.members.iter().map(|m| m.report.sobolev.total).collect(),
            euler_residuals: self.members.iter().map(|m| m.euler_residuals.clone()).collect(),
            energy_margins: self.members.iter().map(|m| m.energy.clone()).collect(),
        }
    }
}

/// `‖a − b‖_{L²([0,T)×𝕋)}` by Parseval per snapshot and trapezoid in time.
pub fn l2_space_time_distance(a: &SnapshotSeries, b: &SnapshotSeries) -> Result<f64, SweepError> {
    check_compatible(a, b)?;
    let w = trapezoid_weights(a.len(), a.spacing());
    let s: f64 = a
        .velocities()
        .zip(b.velocities())
        .zip(&w)
        .map(|((x, y), wi)| wi * l2_distance_sq(x, y))
        .sum();
    Ok(s.sqrt())
}

/// `‖a − b‖_{L^q([0,T)×𝕋)}` by grid quadrature per snapshot.
pub fn lq_space_time_distance(a: &SnapshotSeries, b: &SnapshotSeries, q: f64) -> Result<f64, SweepError> {
    check_compatible(a, b)?;
    if !(q >= 1.0) {
        return Err(SweepError::InvalidConfig(format!("q must be at least 1, got {q}")));
    }
    let w = trapezoid_weights(a.len(), a.spacing());
    let cell = a.grid.cell_volume();
    let s: f64 = a
        .velocities()
        .zip(b.velocities())
        .zip(&w)
        .map(|((x, y), wi)| {
            let mag = to_physical(&x.sub(y)).magnitude();
            wi * cell * par_sum(mag.len(), |i| mag[i].powf(q))
        })
        .sum();
    Ok(s.powf(1.0 / q))
}

fn check_compatible(a: &SnapshotSeries, b: &SnapshotSeries) -> Result<(), SweepError> {
    if a.grid != b.grid || a.len() != b.len() || a.times() != b.times() {
        return Err(SweepError::InvalidConfig("series do not share grid and snapshot times".into()));
    }
    Ok(())
}

fn run_member(cfg: &SweepConfig, mu: f64) -> Result<MemberResult, SweepError> {
    let series = run(&cfg.member_config(mu))?;
    let report = diagnose(&series, &cfg.params)?;
    let bank = default_test_bank(series.grid, series.snapshots.last().map_or(0.0, |s| s.time));
    let euler_residuals = euler_weak_residual(&series, &bank)?;
    let energy = limit_energy_check(&series);
    Ok(MemberResult {
        viscosity: mu,
        under_resolved: mu < cfg.resolution_floor(),
        series,
        report,
        euler_residuals,
        energy,
    })
}

/// Run every member (concurrently), then aggregate in ladder order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, SweepError> {
    cfg.validate()?;
    let outcomes: Vec<Result<MemberResult, SweepError>> =
        cfg.ladder.par_iter().map(|&mu| run_member(cfg, mu)).collect();
    let mut members = Vec::with_capacity(outcomes.len());
    let mut failure = None;
    for (mu, outcome) in cfg.ladder.iter().zip(outcomes) {
        match outcome {
            Ok(m) => members.push(m),
            Err(e) if failure.is_none() => failure = Some((*mu, e)),
            Err(e) => log::error!("sweep member mu = {mu} failed: {e}"),
        }
    }
    if let Some((mu, e)) = failure {
        return Err(SweepError::Partial { mu, source: Box::new(e), completed: members });
    }
    let j = members.len();
    let q = cfg.params.q;
    let pairs: Vec<(usize, usize)> = (0..j).flat_map(|a| (a + 1..j).map(move |b| (a, b))).collect();
    let dists = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (x, y) = (&members[a].series, &members[b].series);
            Ok((l2_space_time_distance(x, y)?, lq_space_time_distance(x, y, q)?))
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    let mut cauchy_l2 = vec![vec![0.0; j]; j];
    let mut cauchy_lq = vec![vec![0.0; j]; j];
    for (&(a, b), (d2, dq)) in pairs.iter().zip(dists) {
        cauchy_l2[a][b] = d2;
        cauchy_l2[b][a] = d2;
        cauchy_lq[a][b] = dq;
        cauchy_lq[b][a] = dq;
    }
    let adjacent: Vec<f64> = (1..j).map(|i| cauchy_l2[i - 1][i]).collect();
    let adjacent_decreasing = adjacent.windows(2).all(|w| w[1] < w[0]);
    for m in &members {
        if m.under_resolved {
            log::warn!("mu = {} is below the resolution floor {:.3e}", m.viscosity, cfg.resolution_floor());
        }
    }
    Ok(SweepResult {
        ladder: cfg.ladder.clone(),
        members,
        cauchy_l2,
        cauchy_lq,
        q,
        adjacent_decreasing,
        reference: j - 1,
    })
}
