use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::spectral::TorusGrid;

/// Named initial velocity fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum VelocityPreset {
    Zero,
    /// `(A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)` in units of `2π/P`.
    Abc { a: f64, b: f64, c: f64 },
    /// `(U cos(k₀ x₂), 0, 0)`.
    Shear { amplitude: f64 },
    /// `U (sin x cos y cos z, −cos x sin y cos z, 0)`.
    TaylorGreen { amplitude: f64 },
    /// Random phases on every dealiased mode with shell in `k_lo..=k_hi`,
    /// scaled to total energy `½ Σ|û|² = energy`.
    RandomBand { k_lo: usize, k_hi: usize, energy: f64 },
}

/// Named initial scalar families. All satisfy `Σᵢ χᵢ = 1` pointwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarPreset {
    /// First species is the indicator of a 2×2×2 checkerboard, the last one
    /// its complement.
    Checkerboard,
    /// Smooth low-mode perturbations of the uniform split `1/I`.
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialCondition {
    Preset { velocity: VelocityPreset, scalars: Option<ScalarPreset> },
    Checkpoint { path: PathBuf },
}

/// Time-independent forcing fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ForcingSpec {
    Zero,
    /// `F (sin(k₀x₃), sin(k₀x₁), sin(k₀x₂))`.
    LowMode { amplitude: f64 },
    /// Random solenoidal field on shells `k_lo..=k_hi` with rms `amplitude`,
    /// drawn once from the run seed.
    Band { k_lo: usize, k_hi: usize, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: TorusGrid,
    pub viscosity: f64,
    pub scalar_diffusivities: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
    pub initial: InitialCondition,
    pub forcing: ForcingSpec,
    pub seed: u64,
    /// Permits `viscosity = 0` for Galerkin conservation checks.
    pub allow_inviscid: bool,
}

impl SimConfig {
    pub fn new(grid: TorusGrid, viscosity: f64, dt: f64, t_end: f64, velocity: VelocityPreset) -> Self {
        Self {
            grid,
            viscosity,
            scalar_diffusivities: Vec::new(),
            dt,
            t_end,
            stride: 1,
            initial: InitialCondition::Preset { velocity, scalars: None },
            forcing: ForcingSpec::Zero,
            seed: 0,
            allow_inviscid: false,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_forcing(mut self, forcing: ForcingSpec) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_scalars(mut self, preset: ScalarPreset, diffusivities: Vec<f64>) -> Self {
        if let InitialCondition::Preset { scalars, .. } = &mut self.initial {
            *scalars = Some(preset);
        }
        self.scalar_diffusivities = diffusivities;
        self
    }

    pub fn inviscid_test_mode(mut self) -> Self {
        self.allow_inviscid = true;
        self
    }

    /// Number of time steps, `round(t_end / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |what: &str| Err(SolverError::InvalidConfig(what.to_string()));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt must be positive");
        }
        if !(self.t_end >= self.dt) {
            return bad("t_end must be at least dt");
        }
        if self.stride == 0 {
            return bad("stride must be at least 1");
        }
        if self.viscosity.is_nan() || self.viscosity < 0.0 {
            return bad("viscosity must be non-negative");
        }
        if self.viscosity == 0.0 && !self.allow_inviscid {
            return bad("viscosity = 0 is only allowed in inviscid test mode");
        }
        if self.scalar_diffusivities.iter().any(|m| !(*m > 0.0)) {
            return bad("scalar diffusivities must be positive");
        }
        if let InitialCondition::Preset { velocity, scalars } = &self.initial {
            if scalars.is_some() && self.scalar_diffusivities.len() < 2 {
                return bad("scalar presets need at least two species");
            }
            if scalars.is_none() && !self.scalar_diffusivities.is_empty() {
                return bad("scalar diffusivities given without a scalar initial condition");
            }
            if let VelocityPreset::RandomBand { k_lo, k_hi, energy } = velocity {
                if *k_lo == 0 || k_lo > k_hi || !(*energy >= 0.0) {
                    return bad("random-band needs 1 <= k_lo <= k_hi and energy >= 0");
                }
            }
        }
        if let ForcingSpec::Band { k_lo, k_hi, .. } = self.forcing {
            if k_lo == 0 || k_lo > k_hi {
                return bad("band forcing needs 1 <= k_lo <= k_hi");
            }
        }
        Ok(())
    }
}
