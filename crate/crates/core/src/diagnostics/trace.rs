use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::modulus::lag_steps;
use super::quadrature::{interval_weights, trapezoid};
use super::DiagnosticsError;
use crate::solver::SnapshotSeries;
use crate::spectral::{sym_index, velocity_products, Mollifier, SpectralError, SpectralField};
use crate::util::par_sum;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Terms of the mollified weak-form identity for the lag `Δt` at scale `δ`:
/// `∫₀^{T−Δt}‖w‖² dt = J₁ + J₂ + J₃ + J₄` with `w = u(t+Δt) − u(t)` and
/// `φ = j_δ * w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JTrace {
    pub dt: f64,
    pub delta: f64,
    pub alpha: f64,
    pub lhs: f64,
    /// `∫∫_t^{t+Δt}∫ (u⊗u):∇φ`
    pub j1: f64,
    /// `−μ ∫∫_t^{t+Δt}∫ ∇u:∇φ`
    pub j2: f64,
    /// `∫∫ w·(w − φ)`
    pub j3: f64,
    /// `∫∫_t^{t+Δt}∫ f·φ`
    pub j4: f64,
    /// `|lhs − (j1+j2+j3+j4)|`
    pub identity_residual: f64,
    /// Residual over `max(|lhs|, |jᵢ|)`, zero when every term vanishes.
    pub relative_residual: f64,
    /// `|J₁| δ^{5/2} / Δt`
    pub c1: f64,
    /// `|J₂| / Δt`
    pub c2: f64,
    /// `|J₃| / δ^α`
    pub c3: f64,
    /// `|J₄| / Δt`
    pub c4: f64,
    /// `C₁ + (C₂ + C₄) δ^{5/2}`
    pub c5: f64,
    /// `C₅ Δt/δ^{5/2} + C₃ δ^α`, an upper bound for `lhs`.
    pub bound: f64,
    /// `(5C₅/(2αC₃))^{2/(5+2α)} Δt^{2/(5+2α)}`; `None` when `C₃ = 0`.
    pub delta_opt: Option<f64>,
    pub constants_finite: bool,
}

fn inner(a: &[Vec<Complex64>], b: &[Vec<Complex64>], weight: impl Fn(usize) -> f64 + Sync) -> f64 {
    a.iter().zip(b).map(|(x, y)| par_sum(x.len(), |i| weight(i) * (x[i] * y[i].conj()).re)).sum()
}

/// `−i k_j (u_i u_j)^` for every mode, the coefficients of `−∇·(u⊗u)`.
fn nonlinear(u: &SpectralField) -> Vec<Vec<Complex64>> {
    let g = u.grid();
    let prod = velocity_products(u);
    (0..3)
        .map(|i| {
            (0..g.len())
                .into_par_iter()
                .map(|idx| {
                    let k = g.wavevector(idx);
                    -I * (0..3).map(|j| prod[sym_index(i, j)][idx] * k[j]).sum::<Complex64>()
                })
                .collect()
        })
        .collect()
}

pub fn proof_trace(series: &SnapshotSeries, dt: f64, delta: f64, alpha: f64) -> Result<JTrace, DiagnosticsError> {
    let g = series.grid;
    let moll = Mollifier::new(delta)?;
    if delta >= 0.5 * g.period() {
        return Err(SpectralError::MollifierTooWide { scale: delta, period: g.period() }.into());
    }
    if !(alpha > 0.0) {
        return Err(DiagnosticsError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let m = lag_steps(series, dt)?;
    let s = &series.snapshots;
    let h = series.spacing();
    let vol = g.volume();
    let nodes = s.len() - m;
    let mult = moll.mode_multipliers(g);

    let mut lhs_t = vec![0.0; nodes];
    let mut j3_t = vec![0.0; nodes];
    let mut phi = Vec::with_capacity(nodes);
    for j in 0..nodes {
        let w = s[j + m].velocity.sub(&s[j].velocity);
        let p = w.map_modes(|idx| mult[idx]);
        lhs_t[j] = vol * inner(w.components(), w.components(), |_| 1.0);
        j3_t[j] = vol * inner(w.components(), w.sub(&p).components(), |_| 1.0);
        phi.push(p);
    }
    let weights: Vec<Vec<f64>> = (0..nodes).map(|j| interval_weights(s.len(), h, j, j + m)).collect();

    let mut j1_t = vec![0.0; nodes];
    let mut j2_t = vec![0.0; nodes];
    let mut j4_t = vec![0.0; nodes];
    let mu = series.viscosity;
    for (n, snap) in s.iter().enumerate() {
        let active: Vec<usize> = (0..nodes).filter(|&j| weights[j][n] != 0.0).collect();
        if active.is_empty() {
            continue;
        }
        let nl = nonlinear(&snap.velocity);
        let u = snap.velocity.components();
        for j in active {
            let wn = weights[j][n];
            let p = phi[j].components();
            j1_t[j] += wn * vol * inner(&nl, p, |_| 1.0);
            j2_t[j] -= wn * mu * vol * inner(u, p, |i| g.k_squared(i));
            // forcing is frozen in time
            j4_t[j] += wn * vol * inner(series.forcing.components(), p, |_| 1.0);
        }
    }

    let lhs = trapezoid(&lhs_t, h);
    let (j1, j2, j3, j4) = (trapezoid(&j1_t, h), trapezoid(&j2_t, h), trapezoid(&j3_t, h), trapezoid(&j4_t, h));
    let identity_residual = (lhs - (j1 + j2 + j3 + j4)).abs();
    let scale = [lhs, j1, j2, j3, j4].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let relative_residual = if scale > 0.0 { identity_residual / scale } else { 0.0 };

    let d52 = delta.powf(2.5);
    let c1 = j1.abs() * d52 / dt;
    let c2 = j2.abs() / dt;
    let c3 = j3.abs() / delta.powf(alpha);
    let c4 = j4.abs() / dt;
    let c5 = c1 + (c2 + c4) * d52;
    let bound = c5 * dt / d52 + c3 * delta.powf(alpha);
    let e = 2.0 / (5.0 + 2.0 * alpha);
    let delta_opt = (c3 > 0.0).then(|| (5.0 * c5 / (2.0 * alpha * c3)).powf(e) * dt.powf(e));
    let constants_finite = [c1, c2, c3, c4, c5].iter().all(|c| c.is_finite());
    Ok(JTrace {
        dt,
        delta,
        alpha,
        lhs,
        j1,
        j2,
        j3,
        j4,
        identity_residual,
        relative_residual,
        c1,
        c2,
        c3,
        c4,
        c5,
        bound,
        delta_opt,
        constants_finite,
    })
}
