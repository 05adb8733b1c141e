use num_complex::Complex64;
use rayon::prelude::*;

use crate::util::par_sum;
use super::field::{forward_many, to_physical};
use super::{SpectralError, SpectralField};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Spectral differential operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOp {
    Gradient,
    Divergence,
    Curl,
    Laplacian,
}

/// Per-mode projection `û − k (k·û)/|k|²` onto divergence-free fields.
/// The mean mode passes through unchanged.
pub fn leray_project(field: &SpectralField) -> Result<SpectralField, SpectralError> {
    if !field.is_vector() {
        return Err(SpectralError::ComponentCount(field.ncomp()));
    }
    let g = field.grid();
    let (a, b, c) = (field.component(0), field.component(1), field.component(2));
    let projected: Vec<[Complex64; 3]> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let v = [a[idx], b[idx], c[idx]];
            project_mode(g.wavevector(idx), v)
        })
        .collect();
    let mut out = SpectralField::from_components(g, unzip3(projected))?;
    out.set_divergence_free_unchecked(true);
    Ok(out)
}

#[inline]
pub(crate) fn project_mode(k: [f64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k2 == 0.0 {
        return v;
    }
    let dot = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / k2;
    [v[0] - dot * k[0], v[1] - dot * k[1], v[2] - dot * k[2]]
}

pub(crate) fn unzip3(v: Vec<[Complex64; 3]>) -> Vec<Vec<Complex64>> {
    let mut out = vec![Vec::with_capacity(v.len()); 3];
    for m in v {
        for (c, z) in out.iter_mut().zip(m) {
            c.push(z);
        }
    }
    out
}

/// Exact spectral differentiation.
pub fn derivative(field: &SpectralField, op: DerivativeOp) -> Result<SpectralField, SpectralError> {
    let g = field.grid();
    let n = g.len();
    match op {
        DerivativeOp::Gradient => {
            if field.ncomp() != 1 {
                return Err(SpectralError::OperatorMismatch { op: "gradient", ncomp: field.ncomp() });
            }
            let s = field.component(0);
            let comps = (0..3)
                .map(|d| (0..n).into_par_iter().map(|idx| I * g.wavevector(idx)[d] * s[idx]).collect())
                .collect();
            SpectralField::from_components(g, comps)
        }
        DerivativeOp::Divergence => {
            if !field.is_vector() {
                return Err(SpectralError::OperatorMismatch { op: "divergence", ncomp: field.ncomp() });
            }
            let div = (0..n)
                .into_par_iter()
                .map(|idx| {
                    let k = g.wavevector(idx);
                    I * (0..3).map(|d| field.component(d)[idx] * k[d]).sum::<Complex64>()
                })
                .collect();
            SpectralField::from_components(g, vec![div])
        }
        DerivativeOp::Curl => {
            if !field.is_vector() {
                return Err(SpectralError::OperatorMismatch { op: "curl", ncomp: field.ncomp() });
            }
            let (a, b, c) = (field.component(0), field.component(1), field.component(2));
            let curl: Vec<[Complex64; 3]> = (0..n)
                .into_par_iter()
                .map(|idx| {
                    let k = g.wavevector(idx);
                    let v = [a[idx], b[idx], c[idx]];
                    [
                        I * (v[2] * k[1] - v[1] * k[2]),
                        I * (v[0] * k[2] - v[2] * k[0]),
                        I * (v[1] * k[0] - v[0] * k[1]),
                    ]
                })
                .collect();
            let mut out = SpectralField::from_components(g, unzip3(curl))?;
            out.set_divergence_free_unchecked(true);
            Ok(out)
        }
        DerivativeOp::Laplacian => Ok(field.map_modes(|idx| -g.k_squared(idx))),
    }
}

/// Physical-normalized fractional norm `|𝕋_P| Σ_k |k|^{2α} |û(k)|²`.
///
/// The mean mode contributes only at `α = 0`, where the value is `∫|u|² dx`.
pub fn fractional_norm_sq(field: &SpectralField, alpha: f64) -> Result<f64, SpectralError> {
    if !(alpha >= 0.0) {
        return Err(SpectralError::NegativeOrder(alpha));
    }
    let g = field.grid();
    let weights: Vec<f64> = (0..g.len()).into_par_iter().map(|idx| g.k_squared(idx).powf(alpha)).collect();
    let s: f64 = field
        .components()
        .iter()
        .map(|c| par_sum(c.len(), |i| weights[i] * c[i].norm_sqr()))
        .sum();
    Ok(s * g.volume())
}

/// Fourier coefficients of the six products `u_i u_j` (i ≤ j), in the order
/// 11, 12, 13, 22, 23, 33.
pub(crate) fn velocity_products(u: &SpectralField) -> Vec<Vec<Complex64>> {
    let phys = to_physical(u);
    let c = phys.components();
    let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let products: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(i, j)| c[i].par_iter().zip(c[j].par_iter()).map(|(a, b)| a * b).collect())
        .collect();
    let refs: Vec<&[f64]> = products.iter().map(Vec::as_slice).collect();
    forward_many(u.grid(), &refs)
}

/// Index into the packed symmetric product list.
#[inline]
pub(crate) fn sym_index(i: usize, j: usize) -> usize {
    const MAP: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    MAP[i][j]
}

/// Zero-mean pressure solving `−Δp = ∂_i∂_j(u_i u_j) − ∇·f` per mode.
pub fn pressure_from_velocity(
    u: &SpectralField,
    forcing: Option<&SpectralField>,
) -> Result<SpectralField, SpectralError> {
    if !u.is_vector() {
        return Err(SpectralError::ComponentCount(u.ncomp()));
    }
    if let Some(f) = forcing {
        if !f.is_vector() {
            return Err(SpectralError::ComponentCount(f.ncomp()));
        }
    }
    let g = u.grid();
    let prod = velocity_products(u);
    let p: Vec<Complex64> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let k = g.wavevector(idx);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                return Complex64::default();
            }
            let mut rhs = Complex64::default();
            for i in 0..3 {
                for j in 0..3 {
                    rhs -= prod[sym_index(i, j)][idx] * (k[i] * k[j]);
                }
            }
            if let Some(f) = forcing {
                let kf: Complex64 = (0..3).map(|d| f.component(d)[idx] * k[d]).sum();
                rhs -= I * kf;
            }
            rhs / k2
        })
        .collect();
    SpectralField::from_components(g, vec![p])
}
