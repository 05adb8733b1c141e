use serde::Serialize;

use super::{check_index, scalar_samples, ConvexTestFunction, ScalarError};
use crate::diagnostics::quadrature::interval_weights;
use crate::solver::SnapshotSeries;
use crate::spectral::{derivative, forward_transform, to_physical, DerivativeOp, PhysicalField, TorusGrid};
use crate::sweep::TimeBump;
use crate::util::par_sum;

/// Lower bound on the normalized residual on resolved runs.
pub const TRANSPORT_TOL: f64 = 1e-6;

/// Non-negative time factors. Profiles other than the bump need not vanish
/// at the ends of the series; both end terms enter the residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeProfile {
    Bump(TimeBump),
    Constant,
    /// `(t − t0)/(t1 − t0)`.
    RampUp { t0: f64, t1: f64 },
    /// `sin(π (t − t0)/(t1 − t0))` on `[t0, t1]`.
    Hump { t0: f64, t1: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Bump(b) => b.value(t),
            Self::Constant => 1.0,
            Self::RampUp { t0, t1 } => (t - t0) / (t1 - t0),
            Self::Hump { t0, t1 } => (std::f64::consts::PI * (t - t0) / (t1 - t0)).sin().max(0.0),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Bump(b) => b.derivative(t),
            Self::Constant => 0.0,
            Self::RampUp { t0, t1 } => 1.0 / (t1 - t0),
            Self::Hump { t0, t1 } => {
                let w = std::f64::consts::PI / (t1 - t0);
                w * (w * (t - t0)).cos()
            }
        }
    }
}

/// Non-negative test field `η(t) ψ(x)`.
#[derive(Debug, Clone)]
pub struct ScalarTestFunction {
    pub name: String,
    pub spatial: PhysicalField,
    pub time: TimeProfile,
}

impl ScalarTestFunction {
    pub fn new(name: impl Into<String>, spatial: PhysicalField, time: TimeProfile) -> Result<Self, ScalarError> {
        let name = name.into();
        if spatial.ncomp() != 1 {
            return Err(ScalarError::InvalidCells(format!("{name}: test field must be scalar")));
        }
        let min = spatial.component(0).iter().copied().fold(f64::INFINITY, f64::min);
        if min < 0.0 {
            return Err(ScalarError::NegativeTestFunction { name, min });
        }
        Ok(Self { name, spatial, time })
    }
}

/// Four positive low-mode fields times a constant, a ramp and a half-sine
/// over `[t0, t1]`. These stay smooth in time, so coarse snapshot spacing
/// still integrates accurately.
pub fn default_scalar_test_bank(grid: TorusGrid, t0: f64, t1: f64) -> Vec<ScalarTestFunction> {
    let k = grid.k0();
    let fields: [(&str, Vec<f64>); 4] = [
        ("one", vec![1.0; grid.len()]),
        ("cx", grid.sample(|x| 1.0 + 0.9 * (k * x[0]).cos())),
        ("sy", grid.sample(|x| 1.0 + 0.9 * (k * x[1]).sin())),
        ("cxyz", grid.sample(|x| (1.0 + 0.5 * (k * x[0]).cos()) * (1.0 + 0.5 * (k * (x[1] + x[2])).sin()))),
    ];
    let profiles = [
        ("const", TimeProfile::Constant),
        ("ramp", TimeProfile::RampUp { t0, t1 }),
        ("hump", TimeProfile::Hump { t0, t1 }),
    ];
    let mut bank = Vec::with_capacity(12);
    for (name, psi) in &fields {
        for (pname, profile) in &profiles {
            let spatial = PhysicalField::new(grid, vec![psi.clone()]).expect("one component");
            bank.push(ScalarTestFunction::new(format!("{name}/{pname}"), spatial, *profile).expect("positive field"));
        }
    }
    bank
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportRow {
    pub scalar_index: usize,
    pub beta: String,
    pub test: String,
    /// `∫∫(β ψ_t + β u·∇ψ + μᵢ β Δψ) + ∫β(χ)ψ|_{t₀} − ∫β(χ)ψ|_{t₁}`;
    /// non-negative in exact arithmetic.
    pub residual: f64,
    /// The `μᵢ ∫∫β Δψ` part, reported on its own.
    pub viscous_term: f64,
    /// `‖ψ‖_{L²}` over space-time.
    pub test_norm: f64,
    /// `‖β(χ)‖_{L²}` over space-time.
    pub beta_norm: f64,
    pub normalized: f64,
    /// `normalized ≥ −TRANSPORT_TOL`.
    pub satisfied: bool,
}

struct Prepared {
    psi: Vec<f64>,
    grad: Vec<Vec<f64>>,
    lap: Vec<f64>,
    psi_sq: f64,
}

/// Weak form of the finite-viscosity convex transport inequality, for scalar
/// `index`, one `β` and every test field in `bank`.
pub fn convex_transport_residual(
    series: &SnapshotSeries,
    index: usize,
    beta: &ConvexTestFunction,
    bank: &[ScalarTestFunction],
) -> Result<Vec<TransportRow>, ScalarError> {
    check_index(series, index)?;
    let g = series.grid;
    let dv = g.cell_volume();
    let mu = series.scalar_diffusivities[index];
    let prepared = bank
        .iter()
        .map(|tf| {
            if tf.spatial.grid() != g {
                return Err(ScalarError::InvalidCells(format!("{}: grid mismatch", tf.name)));
            }
            let hat = forward_transform(&tf.spatial);
            let grad = to_physical(&derivative(&hat, DerivativeOp::Gradient)?).into_components();
            let lap = to_physical(&derivative(&hat, DerivativeOp::Laplacian)?).into_components().swap_remove(0);
            let psi = tf.spatial.component(0).to_vec();
            let psi_sq = par_sum(psi.len(), |i| psi[i] * psi[i]) * dv;
            Ok(Prepared { psi, grad, lap, psi_sq })
        })
        .collect::<Result<Vec<_>, ScalarError>>()?;

    let chi = scalar_samples(series, index);
    let (lo, hi) = chi
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    beta.check_support(lo, hi)?;

    let weights = interval_weights(series.len(), series.spacing(), 0, series.len() - 1);
    let nb = bank.len();
    let (mut acc, mut visc, mut psi_norm) = (vec![0.0; nb], vec![0.0; nb], vec![0.0; nb]);
    let mut beta_norm = 0.0;
    let mut boundary = vec![0.0; nb];
    let last = series.len() - 1;
    for (n, (snap, w)) in series.snapshots.iter().zip(&weights).enumerate() {
        let u = to_physical(&snap.velocity).into_components();
        let b: Vec<f64> = chi[n].iter().map(|x| beta.eval(*x)).collect();
        beta_norm += w * par_sum(b.len(), |i| b[i] * b[i]) * dv;
        for (j, (tf, p)) in bank.iter().zip(&prepared).enumerate() {
            let t = snap.time;
            let (eta, deta) = (tf.time.value(t), tf.time.derivative(t));
            psi_norm[j] += w * eta * eta * p.psi_sq;
            if eta == 0.0 && deta == 0.0 {
                continue;
            }
            let b_psi = par_sum(b.len(), |i| b[i] * p.psi[i]) * dv;
            if n == 0 {
                boundary[j] += eta * b_psi;
            }
            if n == last {
                boundary[j] -= eta * b_psi;
            }
            let b_adv = par_sum(b.len(), |i| {
                b[i] * (u[0][i] * p.grad[0][i] + u[1][i] * p.grad[1][i] + u[2][i] * p.grad[2][i])
            }) * dv;
            let b_lap = par_sum(b.len(), |i| b[i] * p.lap[i]) * dv;
            acc[j] += w * (deta * b_psi + eta * (b_adv + mu * b_lap));
            visc[j] += w * eta * mu * b_lap;
        }
    }
    let beta_norm = beta_norm.sqrt();
    Ok(bank
        .iter()
        .enumerate()
        .map(|(j, tf)| {
            let residual = acc[j] + boundary[j];
            let test_norm = psi_norm[j].sqrt();
            let scale = test_norm * beta_norm;
            let normalized = if scale > 0.0 { residual / scale } else { 0.0 };
            TransportRow {
                scalar_index: index,
                beta: beta.name(),
                test: tf.name.clone(),
                residual,
                viscous_term: visc[j],
                test_norm,
                beta_norm,
                normalized,
                satisfied: normalized >= -TRANSPORT_TOL,
            }
        })
        .collect())
}
