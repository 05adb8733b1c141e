use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Uniform sampling of the periodic cube of side `period`.
///
/// Sample points are `x_j = j * period / n` for `j = 0..n` on every axis. Mode
/// indices follow FFT storage order: index `i` holds integer wavenumber `i`
/// for `i <= n/2` and `i - n` above that, so the retained lattice is
/// `{-n/2+1, ..., n/2}` with `n/2` being the unpaired Nyquist plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    period: f64,
    n: usize,
}

impl TorusGrid {
    pub fn new(period: f64, n: usize) -> Result<Self, SpectralError> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(SpectralError::InvalidPeriod(period));
        }
        if n < 4 || n % 2 != 0 {
            return Err(SpectralError::InvalidResolution(n));
        }
        Ok(Self { period, n })
    }

    /// The `2π`-periodic grid most of the analytic fixtures use.
    pub fn unit(n: usize) -> Result<Self, SpectralError> {
        Self::new(2.0 * PI, n)
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// `|𝕋_P| = P³`.
    #[inline]
    pub fn volume(&self) -> f64 {
        self.period.powi(3)
    }

    /// Fundamental wavenumber `2π/P`.
    #[inline]
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.period
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.n + i2) * self.n + i3
    }

    #[inline]
    pub fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    /// Signed integer wavenumber stored at FFT index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// FFT index holding signed wavenumber `m`, if it is on the lattice.
    #[inline]
    pub fn index_of_wavenumber(&self, m: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if m > half || m <= -half {
            return None;
        }
        Some(if m >= 0 { m as usize } else { (m + self.n as i64) as usize })
    }

    /// Integer wavevector `(n1, n2, n3)` of flat index `idx`.
    #[inline]
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let (a, b, c) = self.unflatten(idx);
        [self.wavenumber(a), self.wavenumber(b), self.wavenumber(c)]
    }

    /// Physical wavevector `(2π/P) n`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let m = self.mode(idx);
        let k0 = self.k0();
        [k0 * m[0] as f64, k0 * m[1] as f64, k0 * m[2] as f64]
    }

    #[inline]
    pub fn k_squared(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Flat index of the mode `-n`. The Nyquist plane maps onto itself.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let (a, b, c) = self.unflatten(idx);
        self.index((n - a) % n, (n - b) % n, (n - c) % n)
    }

    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let (a, b, c) = self.unflatten(idx);
        let h = self.n / 2;
        a == h || b == h || c == h
    }

    /// Largest integer wavenumber that survives the two-thirds truncation.
    #[inline]
    pub fn dealias_cutoff(&self) -> i64 {
        // keep |n| < N/3 strictly
        ((self.n as i64) - 1) / 3
    }

    #[inline]
    pub fn is_dealiased_mode(&self, idx: usize) -> bool {
        let c = self.dealias_cutoff();
        self.mode(idx).iter().all(|m| m.abs() <= c)
    }

    /// Shell index `round(|k| P / 2π)`.
    #[inline]
    pub fn shell(&self, idx: usize) -> usize {
        let m = self.mode(idx);
        ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt().round() as usize
    }

    /// Largest shell that is fully contained in the dealiased cube.
    #[inline]
    pub fn resolved_shells(&self) -> usize {
        self.dealias_cutoff() as usize
    }

    /// Coordinates of grid point `(i1, i2, i3)`.
    #[inline]
    pub fn point(&self, i1: usize, i2: usize, i3: usize) -> [f64; 3] {
        let h = self.spacing();
        [i1 as f64 * h, i2 as f64 * h, i3 as f64 * h]
    }

    /// Evaluate `f` at every grid point in storage order.
    pub fn sample<F: Fn([f64; 3]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let (a, b, c) = self.unflatten(idx);
                f(self.point(a, b, c))
            })
            .collect()
    }
}
