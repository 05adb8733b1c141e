//! Dealiased pseudo-spectral integration of the forced Navier-Stokes
//! equations with passively advected scalars.

mod budget;
mod config;
mod integrator;
mod presets;
mod series;

use thiserror::Error;

use crate::spectral::{pressure_from_velocity, SpectralError, SpectralField};

pub use budget::{energy_budget, BudgetRow, BudgetTable};
pub use config::{ForcingSpec, InitialCondition, ScalarPreset, SimConfig, VelocityPreset};
pub use integrator::{step, Integrator, StageIntegrals, CFL_ADVISORY};
pub use presets::{
    forcing_field, parse_velocity_preset, preset_initial_conditions, scalar_preset, velocity_preset,
};
pub use series::{initial_state, run, run_from, SnapshotSeries, StepRecord};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("solution diverged at t = {time:.6e}: non-finite coefficient at mode {mode:?} (CFL estimate {cfl:.3e})")]
    Diverged { time: f64, mode: [i64; 3], cfl: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Solver state at one instant.
#[derive(Debug, Clone)]
pub struct SimState {
    pub time: f64,
    pub velocity: SpectralField,
    pub scalars: Vec<SpectralField>,
}

impl SimState {
    pub fn new(time: f64, velocity: SpectralField, scalars: Vec<SpectralField>) -> Self {
        Self { time, velocity, scalars }
    }

    /// Zero-mean pressure recomputed from the velocity and forcing.
    pub fn pressure(&self, forcing: Option<&SpectralField>) -> Result<SpectralField, SpectralError> {
        pressure_from_velocity(&self.velocity, forcing)
    }

    /// `½ Σ|û|²`, the kinetic energy per unit volume.
    pub fn energy(&self) -> f64 {
        0.5 * self.velocity.coefficient_energy()
    }

    pub fn is_finite(&self) -> bool {
        self.velocity.is_finite() && self.scalars.iter().all(SpectralField::is_finite)
    }
}
