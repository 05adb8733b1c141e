use serde::{Deserialize, Serialize};

use super::config::InitialCondition;
use super::integrator::Integrator;
use super::presets::{scalar_preset, velocity_preset};
use super::{SimConfig, SimState, SolverError};
use crate::spectral::{SpectralField, TorusGrid};

/// Scalar diagnostics at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: f64,
    /// `½ Σ|û|²`, kinetic energy per unit volume.
    pub energy: f64,
    /// `ε = (μ/|𝕋|) ∫|∇u|² dx`.
    pub dissipation_rate: f64,
    /// `∫ f·u dx`.
    pub injection_rate: f64,
    /// `∫₀ᵗ μ ∫|∇u|² dx ds`.
    pub cumulative_dissipation: f64,
    /// `∫₀ᵗ ∫ f·u dx ds`.
    pub cumulative_injection: f64,
}

/// Snapshots at a fixed stride plus per-step scalar records.
#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    pub grid: TorusGrid,
    pub dt: f64,
    pub stride: usize,
    pub viscosity: f64,
    pub scalar_diffusivities: Vec<f64>,
    pub forcing: SpectralField,
    pub snapshots: Vec<SimState>,
    /// One record per step, `steps[n]` at `t₀ + n·dt`.
    pub steps: Vec<StepRecord>,
}

impl SnapshotSeries {
    /// Series built from externally produced states with uniform spacing
    /// `spacing`. Step records sit at the snapshots and their time integrals
    /// use the trapezoid rule.
    pub fn from_snapshots(
        viscosity: f64,
        spacing: f64,
        forcing: Option<SpectralField>,
        snapshots: Vec<SimState>,
    ) -> Result<Self, SolverError> {
        let first = snapshots
            .first()
            .ok_or_else(|| SolverError::InvalidConfig("series needs at least one snapshot".into()))?;
        let grid = first.velocity.grid();
        if !(spacing > 0.0) {
            return Err(SolverError::InvalidConfig("snapshot spacing must be positive".into()));
        }
        for (i, s) in snapshots.iter().enumerate() {
            if s.velocity.grid() != grid || !s.velocity.is_vector() {
                return Err(SolverError::InvalidConfig(format!("snapshot {i} does not match the first")));
            }
            let expect = first.time + i as f64 * spacing;
            if (s.time - expect).abs() > 1e-9 * spacing.max(expect.abs()) {
                return Err(SolverError::InvalidConfig(format!("snapshot {i} is not uniformly spaced")));
            }
        }
        let forcing = forcing.unwrap_or_else(|| SpectralField::zeros(grid, 3));
        let vol = grid.volume();
        let mut steps: Vec<StepRecord> = Vec::with_capacity(snapshots.len());
        for s in &snapshots {
            let u = &s.velocity;
            let eps = viscosity * dissipation_modes(u);
            let inj = forcing.inner(u);
            let (cd, ci) = match steps.last() {
                Some(p) => (
                    p.cumulative_dissipation + 0.5 * spacing * vol * (p.dissipation_rate + eps),
                    p.cumulative_injection + 0.5 * spacing * (p.injection_rate + inj),
                ),
                None => (0.0, 0.0),
            };
            steps.push(StepRecord {
                time: s.time,
                energy: s.energy(),
                dissipation_rate: eps,
                injection_rate: inj,
                cumulative_dissipation: cd,
                cumulative_injection: ci,
            });
        }
        Ok(Self {
            grid,
            dt: spacing,
            stride: 1,
            viscosity,
            scalar_diffusivities: Vec::new(),
            forcing,
            snapshots,
            steps,
        })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Time between consecutive snapshots.
    pub fn spacing(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// Step record matching snapshot `i`.
    pub fn record_at_snapshot(&self, i: usize) -> &StepRecord {
        &self.steps[i * self.stride]
    }

    pub fn velocities(&self) -> impl Iterator<Item = &SpectralField> {
        self.snapshots.iter().map(|s| &s.velocity)
    }
}

fn dissipation_modes(u: &SpectralField) -> f64 {
    let g = u.grid();
    u.components()
        .iter()
        .map(|c| crate::util::par_sum(c.len(), |i| g.k_squared(i) * c[i].norm_sqr()))
        .sum()
}

/// The state named by the configuration's initial condition.
pub fn initial_state(config: &SimConfig) -> Result<SimState, SolverError> {
    match &config.initial {
        InitialCondition::Preset { velocity, scalars } => {
            let u = velocity_preset(velocity, config.grid, config.seed)?;
            let chi = match scalars {
                Some(p) => scalar_preset(*p, config.grid, config.scalar_diffusivities.len())?,
                None => Vec::new(),
            };
            Ok(SimState::new(0.0, u, chi))
        }
        InitialCondition::Checkpoint { path } => {
            crate::io::read_checkpoint(path).map_err(|e| SolverError::Checkpoint(e.to_string()))
        }
    }
}

/// Integrate the configured problem from its initial condition.
pub fn run(config: &SimConfig) -> Result<SnapshotSeries, SolverError> {
    config.validate()?;
    let state = initial_state(config)?;
    run_from(config, state)
}

/// Integrate from a given state for `config.steps()` steps.
pub fn run_from(config: &SimConfig, initial: SimState) -> Result<SnapshotSeries, SolverError> {
    let mut integ = Integrator::new(config)?;
    let mut state = integ.prepare(&initial)?;
    let t0 = state.time;
    let nsteps = config.steps();
    let record = |integ: &Integrator, s: &SimState, cd: f64, ci: f64| StepRecord {
        time: s.time,
        energy: s.energy(),
        dissipation_rate: integ.dissipation_rate(&s.velocity),
        injection_rate: integ.injection_rate(&s.velocity),
        cumulative_dissipation: cd,
        cumulative_injection: ci,
    };
    let mut steps = Vec::with_capacity(nsteps + 1);
    steps.push(record(&integ, &state, 0.0, 0.0));
    let mut snapshots = vec![state.clone()];
    let (mut cd, mut ci) = (0.0, 0.0);
    for n in 1..=nsteps {
        let (mut next, integrals) = integ.step(&state)?;
        // times as t₀ + n·dt keep the spacing exactly uniform
        next.time = t0 + n as f64 * config.dt;
        cd += integrals.dissipation;
        ci += integrals.injection;
        steps.push(record(&integ, &next, cd, ci));
        if n % config.stride == 0 {
            snapshots.push(next.clone());
        }
        state = next;
        if n % 100 == 0 {
            log::debug!("step {n}/{nsteps}, t = {:.4}, E = {:.6e}", state.time, state.energy());
        }
    }
    Ok(SnapshotSeries {
        grid: config.grid,
        dt: config.dt,
        stride: config.stride,
        viscosity: config.viscosity,
        scalar_diffusivities: config.scalar_diffusivities.clone(),
        forcing: integ.forcing().clone(),
        snapshots,
        steps,
    })
}
