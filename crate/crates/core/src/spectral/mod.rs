//! Fourier representation of real fields on the periodic cube and the
//! per-mode operators built on it.

mod fft;
mod field;
mod grid;
mod mollifier;
mod ops;

use thiserror::Error;

pub use field::{
    forward_transform, inverse_transform, PhysicalField, SpectralField, DIVERGENCE_TOL, HERMITIAN_TOL,
};
pub(crate) use field::{forward_many, inverse_many, to_physical};
pub use grid::TorusGrid;
pub use mollifier::{bump, mollify, Mollifier, PROFILE_SAMPLES};
pub use ops::{derivative, fractional_norm_sq, leray_project, pressure_from_velocity, DerivativeOp};
pub(crate) use ops::{project_mode, sym_index, unzip3, velocity_products};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("points per axis must be even and at least 4, got {0}")]
    InvalidResolution(usize),
    #[error("period must be positive and finite, got {0}")]
    InvalidPeriod(f64),
    #[error("sample array of length {0} is not an N³ cube with matching grid")]
    NonCubic(usize),
    #[error("fields have 1 or 3 components, got {0}")]
    ComponentCount(usize),
    #[error("{op} is not defined for a field with {ncomp} components")]
    OperatorMismatch { op: &'static str, ncomp: usize },
    #[error("Hermitian symmetry violated (relative defect {0:.3e})")]
    NotHermitian(f64),
    #[error("field is not divergence-free (relative defect {0:.3e})")]
    NotDivergenceFree(f64),
    #[error("fractional order must be non-negative, got {0}")]
    NegativeOrder(f64),
    #[error("mollifier scale must be positive, got {0}")]
    InvalidMollifierScale(f64),
    #[error("mollifier scale {scale} must be below half the period {period}")]
    MollifierTooWide { scale: f64, period: f64 },
}
