use num_complex::Complex64;
use serde::Serialize;

use super::SweepError;
use crate::diagnostics::quadrature::interval_weights;
use crate::solver::SnapshotSeries;
use crate::spectral::{
    forward_transform, leray_project, sym_index, velocity_products, PhysicalField, SpectralField, TorusGrid, DIVERGENCE_TOL,
};
use crate::util::par_sum;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Smooth bump `exp(−1/(1−s²))`, `s = (t − center)/half_width`, vanishing
/// outside `|s| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeBump {
    pub center: f64,
    pub half_width: f64,
}

impl TimeBump {
    pub fn value(&self, t: f64) -> f64 {
        let s = (t - self.center) / self.half_width;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s * s)).exp()
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let s = (t - self.center) / self.half_width;
        if s.abs() >= 1.0 {
            0.0
        } else {
            let d = 1.0 - s * s;
            self.value(t) * (-2.0 * s / (d * d)) / self.half_width
        }
    }
}

/// Space-time test field `η(t) ψ(x)` with solenoidal `ψ`.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub name: String,
    pub spatial: SpectralField,
    pub bump: TimeBump,
}

impl TestFunction {
    pub fn new(name: impl Into<String>, spatial: SpectralField, bump: TimeBump) -> Result<Self, SweepError> {
        let name = name.into();
        if !spatial.is_vector() {
            return Err(SweepError::InvalidTestFunction(format!("{name}: not a vector field")));
        }
        let defect = spatial.divergence_defect();
        if defect > DIVERGENCE_TOL {
            return Err(SweepError::InvalidTestFunction(format!(
                "{name}: not divergence-free (relative defect {defect:.3e})"
            )));
        }
        Ok(Self { name, spatial, bump })
    }
}

fn vector_field(grid: TorusGrid, f: impl Fn([f64; 3]) -> [f64; 3]) -> SpectralField {
    let mut comps = vec![Vec::with_capacity(grid.len()); 3];
    for idx in 0..grid.len() {
        let (a, b, c) = grid.unflatten(idx);
        let v = f(grid.point(a, b, c));
        for d in 0..3 {
            comps[d].push(v[d]);
        }
    }
    forward_transform(&PhysicalField::new(grid, comps).expect("three components"))
}

/// Four solenoidal low-mode fields times three time bumps inside `(0, T)`.
pub fn default_test_bank(grid: TorusGrid, t_end: f64) -> Vec<TestFunction> {
    let k = grid.k0();
    let fields: [(&str, SpectralField); 4] = [
        ("sz-cz", vector_field(grid, |x| [(k * x[2]).sin(), (k * x[2]).cos(), 0.0])),
        ("sx-cx", vector_field(grid, |x| [0.0, (k * x[0]).sin(), (k * x[0]).cos()])),
        ("c2y-s2x", vector_field(grid, |x| [(2.0 * k * x[1]).cos(), 0.0, (2.0 * k * x[0]).sin()])),
        ("cxz", vector_field(grid, |x| [0.0, (k * (x[0] + x[2])).cos(), 0.0])),
    ];
    let bumps = [(0.5, 0.45), (0.3, 0.25), (0.7, 0.25)]
        .map(|(c, w)| TimeBump { center: c * t_end, half_width: w * t_end });
    let mut bank = Vec::with_capacity(12);
    for (name, psi) in &fields {
        for (b, bump) in bumps.iter().enumerate() {
            // removes round-off gradient parts left by sampling
            let spatial = leray_project(psi).expect("vector field");
            bank.push(TestFunction { name: format!("{name}/bump{b}"), spatial, bump: *bump });
        }
    }
    bank
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakResidual {
    pub name: String,
    /// `∫∫(u·φ_t + (u⊗u):∇φ + f·φ) + ∫u₀·φ(0)`
    pub residual: f64,
    /// `‖φ‖_{L²([0,T)×𝕋)}`
    pub test_norm: f64,
    pub normalized: f64,
}

fn re_inner(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| par_sum(x.len(), |i| (x[i] * y[i].conj()).re)).sum()
}

/// Weak-form Euler residual of a series for each test function. The forcing
/// is the series' frozen forcing field.
pub fn euler_weak_residual(series: &SnapshotSeries, bank: &[TestFunction]) -> Result<Vec<WeakResidual>, SweepError> {
    let g = series.grid;
    let vol = g.volume();
    for tf in bank {
        if tf.spatial.grid() != g {
            return Err(SweepError::InvalidTestFunction(format!("{}: grid mismatch", tf.name)));
        }
        let defect = tf.spatial.divergence_defect();
        if defect > DIVERGENCE_TOL {
            return Err(SweepError::InvalidTestFunction(format!("{}: divergence defect {defect:.3e}", tf.name)));
        }
    }
    // ∇ψ in coefficient space, (i k_j ψ̂_i) packed per (i, j)
    let grads: Vec<Vec<Vec<Complex64>>> = bank
        .iter()
        .map(|tf| {
            (0..9)
                .map(|ij| {
                    let (i, j) = (ij / 3, ij % 3);
                    let psi = tf.spatial.component(i);
                    (0..g.len()).map(|idx| I * g.wavevector(idx)[j] * psi[idx]).collect()
                })
                .collect()
        })
        .collect();
    // sixth-order weights; the integrand is smooth and compactly supported
    let weights = interval_weights(series.len(), series.spacing(), 0, series.len() - 1);
    let mut acc = vec![0.0; bank.len()];
    let mut norm_t = vec![0.0; bank.len()];
    for (snap, w) in series.snapshots.iter().zip(&weights) {
        let t = snap.time;
        let u = snap.velocity.components();
        let prod = velocity_products(&snap.velocity);
        for (b, tf) in bank.iter().enumerate() {
            let psi = tf.spatial.components();
            let eta = tf.bump.value(t);
            let deta = tf.bump.derivative(t);
            if eta == 0.0 && deta == 0.0 {
                continue;
            }
            let u_psi = re_inner(u, psi);
            let f_psi = re_inner(series.forcing.components(), psi);
            let mut conv = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    conv += re_inner(std::slice::from_ref(&prod[sym_index(i, j)]), std::slice::from_ref(&grads[b][3 * i + j]));
                }
            }
            acc[b] += w * vol * (deta * u_psi + eta * (conv + f_psi));
            norm_t[b] += w * eta * eta;
        }
    }
    let u0 = &series.snapshots[0];
    Ok(bank
        .iter()
        .enumerate()
        .map(|(b, tf)| {
            let boundary = tf.bump.value(u0.time) * vol * re_inner(u0.velocity.components(), tf.spatial.components());
            let residual = acc[b] + boundary;
            let test_norm = (norm_t[b] * tf.spatial.l2_norm_sq()).sqrt();
            WeakResidual {
                name: tf.name.clone(),
                residual,
                test_norm,
                normalized: if test_norm > 0.0 { residual / test_norm } else { 0.0 },
            }
        })
        .collect())
}

/// Limit energy inequality margins `‖u₀‖² + 2∫₀ᵗ∫u·f − ‖u(t)‖²` per snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyMargins {
    pub times: Vec<f64>,
    pub margins: Vec<f64>,
    pub tolerance: f64,
    pub satisfied: bool,
}

/// Margins with tolerance `10⁻⁸ ‖u₀‖²`.
pub fn limit_energy_check(series: &SnapshotSeries) -> EnergyMargins {
    let vol = series.grid.volume();
    let r0 = series.record_at_snapshot(0);
    let norm0 = 2.0 * vol * r0.energy;
    let (times, margins): (Vec<f64>, Vec<f64>) = (0..series.len())
        .map(|i| {
            let r = series.record_at_snapshot(i);
            let inj = r.cumulative_injection - r0.cumulative_injection;
            (r.time, norm0 + 2.0 * inj - 2.0 * vol * r.energy)
        })
        .unzip();
    let tolerance = 1e-8 * norm0;
    let satisfied = margins.iter().all(|m| *m >= -tolerance);
    EnergyMargins { times, margins, tolerance, satisfied }
}
