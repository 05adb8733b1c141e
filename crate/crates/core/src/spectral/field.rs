use num_complex::Complex64;
use rayon::prelude::*;

use super::fft;
use crate::util::par_sum;
use super::{SpectralError, TorusGrid};

/// Relative tolerance of the divergence-free tag, `|k·û| ≤ tol |k| |û|`.
pub const DIVERGENCE_TOL: f64 = 1e-12;
/// Largest Hermitian defect tolerated by [`inverse_transform`].
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Real-space samples of a scalar (1 component) or vector (3 components) field.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: TorusGrid,
    components: Vec<Vec<f64>>,
}

impl PhysicalField {
    pub fn new(grid: TorusGrid, components: Vec<Vec<f64>>) -> Result<Self, SpectralError> {
        check_component_count(components.len())?;
        for c in &components {
            if c.len() != grid.len() {
                return Err(SpectralError::NonCubic(c.len()));
            }
        }
        Ok(Self { grid, components })
    }

    /// Build from flat sample arrays, inferring `N` from their length.
    pub fn from_samples(period: f64, components: Vec<Vec<f64>>) -> Result<Self, SpectralError> {
        let len = components.first().map(Vec::len).unwrap_or(0);
        let n = (len as f64).cbrt().round() as usize;
        if n * n * n != len || len == 0 {
            return Err(SpectralError::NonCubic(len));
        }
        let grid = TorusGrid::new(period, n)?;
        Self::new(grid, components)
    }

    pub fn zeros(grid: TorusGrid, ncomp: usize) -> Self {
        Self { grid, components: vec![vec![0.0; grid.len()]; ncomp] }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.components[c]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    /// Pointwise Euclidean magnitude across components.
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.components.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect()
    }

    /// Midpoint-rule `∫ |u|² dx`.
    pub fn l2_norm_sq(&self) -> f64 {
        let dv = self.grid.cell_volume();
        self.components.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() * dv
    }
}

/// Fourier coefficients `û(k) = |𝕋_P|⁻¹ ∫ u e^{-ik·x} dx` of a real field,
/// stored over the full lattice in FFT order, one array per component.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    components: Vec<Vec<Complex64>>,
    divergence_free: bool,
}

fn check_component_count(ncomp: usize) -> Result<(), SpectralError> {
    if ncomp == 1 || ncomp == 3 {
        Ok(())
    } else {
        Err(SpectralError::ComponentCount(ncomp))
    }
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid, ncomp: usize) -> Self {
        Self {
            grid,
            components: vec![vec![Complex64::default(); grid.len()]; ncomp],
            divergence_free: ncomp == 3,
        }
    }

    /// Wrap raw coefficient arrays. The divergence-free tag is not set.
    pub fn from_components(
        grid: TorusGrid,
        components: Vec<Vec<Complex64>>,
    ) -> Result<Self, SpectralError> {
        check_component_count(components.len())?;
        for c in &components {
            if c.len() != grid.len() {
                return Err(SpectralError::NonCubic(c.len()));
            }
        }
        Ok(Self { grid, components, divergence_free: false })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.components.len()
    }

    pub fn is_vector(&self) -> bool {
        self.components.len() == 3
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.components[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        self.divergence_free = false;
        &mut self.components[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.components
    }

    /// Coefficient vector of flat mode `idx`.
    pub fn mode_value(&self, idx: usize) -> Vec<Complex64> {
        self.components.iter().map(|c| c[idx]).collect()
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// Largest `|k·û(k)| / (|k| |û(k)|)` over the lattice (vector fields only).
    pub fn divergence_defect(&self) -> f64 {
        if !self.is_vector() {
            return 0.0;
        }
        (0..self.grid.len())
            .into_par_iter()
            .map(|idx| {
                let k = self.grid.wavevector(idx);
                let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
                let mag = (0..3).map(|c| self.components[c][idx].norm_sqr()).sum::<f64>().sqrt();
                if kn == 0.0 || mag == 0.0 {
                    return 0.0;
                }
                let dot: Complex64 = (0..3).map(|c| self.components[c][idx] * k[c]).sum();
                dot.norm() / (kn * mag)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Set the divergence-free tag after verifying it per mode.
    pub fn tag_divergence_free(&mut self) -> Result<(), SpectralError> {
        if !self.is_vector() {
            return Err(SpectralError::ComponentCount(self.ncomp()));
        }
        let defect = self.divergence_defect();
        if defect > DIVERGENCE_TOL {
            return Err(SpectralError::NotDivergenceFree(defect));
        }
        self.divergence_free = true;
        Ok(())
    }

    pub(crate) fn set_divergence_free_unchecked(&mut self, flag: bool) {
        self.divergence_free = flag && self.is_vector();
    }

    /// `max_k |û(k) − conj û(−k)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let g = self.grid;
        self.components
            .iter()
            .map(|c| {
                (0..g.len())
                    .into_par_iter()
                    .map(|idx| (c[idx] - c[g.conjugate_index(idx)].conj()).norm())
                    .reduce(|| 0.0, f64::max)
            })
            .fold(0.0, f64::max)
            / scale
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `Σ_k |û(k)|²` summed over components.
    pub fn coefficient_energy(&self) -> f64 {
        self.components.iter().map(|c| par_sum(c.len(), |i| c[i].norm_sqr())).sum()
    }

    /// Physical `∫ |u|² dx = |𝕋_P| Σ |û|²`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.volume() * self.coefficient_energy()
    }

    /// `∫ u · v dx` via Parseval.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        debug_assert_eq!(self.ncomp(), other.ncomp());
        let s: f64 = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| par_sum(a.len(), |i| (a[i] * b[i].conj()).re))
            .sum();
        s * self.grid.volume()
    }

    /// `self − other`, keeping the divergence-free tag only if both carry it.
    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &SpectralField, f: impl Fn(Complex64, Complex64) -> Complex64 + Sync) -> SpectralField {
        assert_eq!(self.ncomp(), other.ncomp(), "component mismatch");
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.par_iter().zip(b.par_iter()).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        SpectralField {
            grid: self.grid,
            components,
            divergence_free: self.divergence_free && other.divergence_free,
        }
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        let components = self
            .components
            .iter()
            .map(|c| c.par_iter().map(|z| z * s).collect())
            .collect();
        SpectralField { grid: self.grid, components, divergence_free: self.divergence_free }
    }

    /// Multiply every mode by a real multiplier `m(k)`; tags are preserved.
    pub fn map_modes(&self, m: impl Fn(usize) -> f64 + Sync) -> SpectralField {
        let components = self
            .components
            .iter()
            .map(|c| c.par_iter().enumerate().map(|(idx, z)| z * m(idx)).collect())
            .collect();
        SpectralField { grid: self.grid, components, divergence_free: self.divergence_free }
    }

    /// Zero every mode outside the two-thirds truncation cube.
    pub fn dealias(&self) -> SpectralField {
        let g = self.grid;
        self.map_modes(|idx| if g.is_dealiased_mode(idx) { 1.0 } else { 0.0 })
    }

    /// Coefficient-wise equality of bit patterns.
    pub fn bit_eq(&self, other: &SpectralField) -> bool {
        self.grid == other.grid
            && self.ncomp() == other.ncomp()
            && self.components.iter().zip(&other.components).all(|(a, b)| {
                a.iter().zip(b).all(|(x, y)| {
                    x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
                })
            })
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// Hermitian-symmetric coefficients of one real sample array, Nyquist zeroed.
pub(crate) fn forward_real(grid: TorusGrid, samples: &[f64]) -> Vec<Complex64> {
    let n = grid.n();
    let mut z: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(&mut z, n);
    let norm = 1.0 / grid.len() as f64;
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if grid.is_nyquist(idx) {
                Complex64::default()
            } else {
                (z[idx] + z[grid.conjugate_index(idx)].conj()) * (0.5 * norm)
            }
        })
        .collect()
}

/// Coefficients of two real arrays with one complex transform.
pub(crate) fn forward_real_pair(
    grid: TorusGrid,
    a: &[f64],
    b: &[f64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n();
    let mut z: Vec<Complex64> =
        a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    fft::forward(&mut z, n);
    let half = 0.5 / grid.len() as f64;
    let pairs: Vec<(Complex64, Complex64)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if grid.is_nyquist(idx) {
                return (Complex64::default(), Complex64::default());
            }
            let zk = z[idx];
            let zm = z[grid.conjugate_index(idx)].conj();
            let fa = (zk + zm) * half;
            // (zk - zm) / (2i)
            let d = (zk - zm) * half;
            let fb = Complex64::new(d.im, -d.re);
            (fa, fb)
        })
        .collect();
    pairs.into_iter().unzip()
}

/// Real samples of one Hermitian coefficient array (imaginary residue dropped).
pub(crate) fn inverse_real(grid: TorusGrid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut z = coeffs.to_vec();
    fft::inverse(&mut z, grid.n());
    z.into_iter().map(|v| v.re).collect()
}

/// Real samples of two Hermitian coefficient arrays with one complex transform.
pub(crate) fn inverse_real_pair(
    grid: TorusGrid,
    a: &[Complex64],
    b: &[Complex64],
) -> (Vec<f64>, Vec<f64>) {
    let mut z: Vec<Complex64> = a
        .par_iter()
        .zip(b.par_iter())
        .map(|(x, y)| x + Complex64::new(-y.im, y.re))
        .collect();
    fft::inverse(&mut z, grid.n());
    z.into_iter().map(|v| (v.re, v.im)).unzip()
}

/// Inverse transform of any number of Hermitian arrays, pairing them up.
pub(crate) fn inverse_many(grid: TorusGrid, arrays: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(arrays.len());
    let mut chunks = arrays.chunks_exact(2);
    for pair in &mut chunks {
        let (x, y) = inverse_real_pair(grid, pair[0], pair[1]);
        out.push(x);
        out.push(y);
    }
    if let [last] = chunks.remainder() {
        out.push(inverse_real(grid, last));
    }
    out
}

/// Forward transform of any number of real arrays, pairing them up.
pub(crate) fn forward_many(grid: TorusGrid, arrays: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(arrays.len());
    let mut chunks = arrays.chunks_exact(2);
    for pair in &mut chunks {
        let (x, y) = forward_real_pair(grid, pair[0], pair[1]);
        out.push(x);
        out.push(y);
    }
    if let [last] = chunks.remainder() {
        out.push(forward_real(grid, last));
    }
    out
}

/// Real samples to Fourier coefficients under the `1/|𝕋_P|` convention.
///
/// The unpaired Nyquist modes are zeroed, so the result is exactly
/// Hermitian-symmetric.
pub fn forward_transform(field: &PhysicalField) -> SpectralField {
    let grid = field.grid();
    let refs: Vec<&[f64]> = field.components().iter().map(Vec::as_slice).collect();
    SpectralField { grid, components: forward_many(grid, &refs), divergence_free: false }
}

/// Fourier coefficients to real samples. Fails on a Hermitian defect above
/// [`HERMITIAN_TOL`] instead of silently symmetrizing.
pub fn inverse_transform(field: &SpectralField) -> Result<PhysicalField, SpectralError> {
    let defect = field.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(SpectralError::NotHermitian(defect));
    }
    Ok(to_physical(field))
}

/// [`inverse_transform`] without the symmetry check, for fields produced by
/// symmetry-preserving operations.
pub(crate) fn to_physical(field: &SpectralField) -> PhysicalField {
    let grid = field.grid();
    let refs: Vec<&[Complex64]> = field.components().iter().map(Vec::as_slice).collect();
    PhysicalField { grid, components: inverse_many(grid, &refs) }
}
