use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{SpectralError, SpectralField};

/// Points per axis of the fixed sampling of `[-1, 1]³` used for `ĵ`.
pub const PROFILE_SAMPLES: usize = 64;

/// Unnormalized bump profile `exp(−1/(1−r²))` on the open unit ball.
#[inline]
pub fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Marginal of the discretely normalized profile along one axis:
/// `m(z₁) = Σ_{z₂,z₃} j(z) h³`, so that `Σ m = 1` and
/// `ĵ(ξ) = Σ_{z₁} m(z₁) cos(ξ z₁)` for the radial profile.
fn marginal() -> &'static (Vec<f64>, Vec<f64>) {
    static MARGINAL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    MARGINAL.get_or_init(|| {
        let n = PROFILE_SAMPLES;
        let h = 2.0 / n as f64;
        let nodes: Vec<f64> = (0..n).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
        let mut m: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                let mut s = 0.0;
                for &y in &nodes {
                    for &z in &nodes {
                        s += bump(x * x + y * y + z * z);
                    }
                }
                s
            })
            .collect();
        let total: f64 = m.iter().sum();
        m.iter_mut().for_each(|v| *v /= total);
        (nodes, m)
    })
}

/// Standard mollifier `j_δ(x) = δ⁻³ j(x/δ)` with a unit-mass bump profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    scale: f64,
}

impl Mollifier {
    pub fn new(scale: f64) -> Result<Self, SpectralError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(SpectralError::InvalidMollifierScale(scale));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Total mass of the sampled, normalized profile.
    pub fn sampled_mass() -> f64 {
        marginal().1.iter().sum()
    }

    /// `ĵ(ξ) = ∫ j(z) e^{−iξ·z} dz` of the unit-scale profile at `|ξ| = xi`.
    pub fn profile_transform(xi: f64) -> f64 {
        let (nodes, m) = marginal();
        nodes.iter().zip(m).map(|(z, w)| w * (xi * z).cos()).sum()
    }

    /// Multiplier `ĵ(δ|k|)` applied to the coefficient at `|k|`.
    pub fn multiplier(&self, k_norm: f64) -> f64 {
        Self::profile_transform(self.scale * k_norm)
    }

    /// Multipliers for every mode of `grid`, computed once per `|n|²`.
    pub fn mode_multipliers(&self, grid: super::TorusGrid) -> Vec<f64> {
        let half = (grid.n() / 2) as i64;
        let max_n2 = (3 * half * half) as usize;
        let k0 = grid.k0();
        let table: Vec<f64> =
            (0..=max_n2).map(|n2| self.multiplier(k0 * (n2 as f64).sqrt())).collect();
        (0..grid.len())
            .map(|idx| {
                let m = grid.mode(idx);
                table[(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as usize]
            })
            .collect()
    }
}

/// Periodic convolution `j_δ * w` as a per-mode multiplication by `ĵ(δk)`.
pub fn mollify(field: &SpectralField, mollifier: &Mollifier) -> Result<SpectralField, SpectralError> {
    let grid = field.grid();
    if mollifier.scale() >= grid.period() / 2.0 {
        return Err(SpectralError::MollifierTooWide { scale: mollifier.scale(), period: grid.period() });
    }
    let m = mollifier.mode_multipliers(grid);
    Ok(field.map_modes(|idx| m[idx]))
}
