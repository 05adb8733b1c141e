use num_complex::Complex64;
use rayon::prelude::*;

use super::presets::forcing_field;
use super::{SimConfig, SimState, SolverError};
use crate::spectral::{inverse_many, forward_many, project_mode, sym_index, unzip3, SpectralField, TorusGrid};
use crate::util::par_sum;

/// Advisory bound on `dt · max|u| · N / P`.
pub const CFL_ADVISORY: f64 = 0.5;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

type Fields = Vec<Vec<Complex64>>;

/// Time integrals over one step, accumulated with the Runge-Kutta stage
/// weights so they carry the order of the scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageIntegrals {
    /// `∫ μ ∫|∇u|² dx dt`
    pub dissipation: f64,
    /// `∫ ∫ f·u dx dt`
    pub injection: f64,
    /// CFL number at the start of the step.
    pub cfl: f64,
}

/// Fourth-order Runge-Kutta with an exact integrating factor for the
/// diffusion terms.
#[derive(Debug)]
pub struct Integrator {
    grid: TorusGrid,
    dt: f64,
    viscosity: f64,
    forcing: SpectralField,
    mask: Vec<bool>,
    // per group (velocity, then each scalar): e^{-μ|k|²dt} and e^{-μ|k|²dt/2}
    full: Vec<Vec<f64>>,
    half: Vec<Vec<f64>>,
    nscalars: usize,
    cfl_warned: bool,
}

impl Integrator {
    pub fn new(config: &SimConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let grid = config.grid;
        let mask: Vec<bool> = (0..grid.len()).map(|i| grid.is_dealiased_mode(i)).collect();
        let factors = |nu: f64, t: f64| -> Vec<f64> {
            (0..grid.len()).into_par_iter().map(|i| (-nu * grid.k_squared(i) * t).exp()).collect()
        };
        let coeffs: Vec<f64> =
            std::iter::once(config.viscosity).chain(config.scalar_diffusivities.iter().copied()).collect();
        Ok(Self {
            grid,
            dt: config.dt,
            viscosity: config.viscosity,
            forcing: forcing_field(&config.forcing, grid, config.seed).dealias(),
            mask,
            full: coeffs.iter().map(|&nu| factors(nu, config.dt)).collect(),
            half: coeffs.iter().map(|&nu| factors(nu, 0.5 * config.dt)).collect(),
            nscalars: config.scalar_diffusivities.len(),
            cfl_warned: false,
        })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The (dealiased) forcing field.
    pub fn forcing(&self) -> &SpectralField {
        &self.forcing
    }

    /// Galerkin-truncate a state onto the dealiased modes and check it is
    /// compatible with this integrator.
    pub fn prepare(&self, state: &SimState) -> Result<SimState, SolverError> {
        if state.velocity.grid() != self.grid {
            return Err(SolverError::InvalidConfig("initial state grid does not match configuration".into()));
        }
        if state.scalars.len() != self.nscalars {
            return Err(SolverError::InvalidConfig(format!(
                "initial state has {} scalars but {} diffusivities are configured",
                state.scalars.len(),
                self.nscalars
            )));
        }
        let mut u = state.velocity.dealias();
        u.tag_divergence_free()?;
        Ok(SimState {
            time: state.time,
            velocity: u,
            scalars: state.scalars.iter().map(SpectralField::dealias).collect(),
        })
    }

    /// `(μ/|𝕋|) ∫|∇u|² dx = μ Σ |k|²|û|²`.
    pub fn dissipation_rate(&self, u: &SpectralField) -> f64 {
        self.viscosity * dissipation_sum(self.grid, u.components())
    }

    /// `∫ f·u dx`.
    pub fn injection_rate(&self, u: &SpectralField) -> f64 {
        injection_sum(self.forcing.components(), u.components()) * self.grid.volume()
    }

    fn group(&self, c: usize) -> usize {
        c.saturating_sub(2)
    }

    fn rhs(&self, y: &Fields) -> (Fields, f64) {
        let g = self.grid;
        let refs: Vec<&[Complex64]> = y.iter().map(Vec::as_slice).collect();
        let phys = inverse_many(g, &refs);
        let umax = phys[..3]
            .iter()
            .map(|c| c.par_iter().map(|v| v.abs()).reduce(|| 0.0, f64::max))
            .fold(0.0, f64::max);

        let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        let mut products: Vec<Vec<f64>> = pairs
            .iter()
            .map(|&(i, j)| phys[i].par_iter().zip(phys[j].par_iter()).map(|(a, b)| a * b).collect())
            .collect();
        for s in 0..self.nscalars {
            for j in 0..3 {
                products.push(phys[3 + s].par_iter().zip(phys[j].par_iter()).map(|(a, b)| a * b).collect());
            }
        }
        drop(phys);
        let prefs: Vec<&[f64]> = products.iter().map(Vec::as_slice).collect();
        let hat = forward_many(g, &prefs);
        drop(products);

        let f = &self.forcing;
        let vel: Vec<[Complex64; 3]> = (0..g.len())
            .into_par_iter()
            .map(|idx| {
                if !self.mask[idx] {
                    return [Complex64::default(); 3];
                }
                let k = g.wavevector(idx);
                let mut v = [Complex64::default(); 3];
                for (i, vi) in v.iter_mut().enumerate() {
                    let mut div = Complex64::default();
                    for (j, kj) in k.iter().enumerate() {
                        div += hat[sym_index(i, j)][idx] * *kj;
                    }
                    *vi = -I * div + f.component(i)[idx];
                }
                project_mode(k, v)
            })
            .collect();
        let mut out = unzip3(vel);
        for s in 0..self.nscalars {
            let base = 6 + 3 * s;
            out.push(
                (0..g.len())
                    .into_par_iter()
                    .map(|idx| {
                        if !self.mask[idx] {
                            return Complex64::default();
                        }
                        let k = g.wavevector(idx);
                        let div: Complex64 = (0..3).map(|j| hat[base + j][idx] * k[j]).sum();
                        -I * div
                    })
                    .collect(),
            );
        }
        (out, umax)
    }

    fn combine(&self, ncomp: usize, f: impl Fn(usize, usize) -> Complex64 + Sync) -> Fields {
        (0..ncomp).map(|c| (0..self.grid.len()).into_par_iter().map(|i| f(c, i)).collect()).collect()
    }

    fn stage_rates(&self, y: &Fields) -> (f64, f64) {
        let d = self.viscosity * dissipation_sum(self.grid, &y[..3]);
        let inj = injection_sum(self.forcing.components(), &y[..3]);
        let vol = self.grid.volume();
        (d * vol, inj * vol)
    }

    /// Advance one step of length `dt`.
    pub fn step(&mut self, state: &SimState) -> Result<(SimState, StageIntegrals), SolverError> {
        let h = self.dt;
        let nc = 3 + self.nscalars;
        let mut u: Fields = state.velocity.components().to_vec();
        u.extend(state.scalars.iter().map(|s| s.components()[0].clone()));

        let (k1, umax) = self.rhs(&u);
        let cfl = h * umax / self.grid.spacing();
        if cfl > CFL_ADVISORY && !self.cfl_warned {
            log::warn!("CFL estimate {cfl:.3} exceeds advisory {CFL_ADVISORY} at t = {:.6}", state.time);
            self.cfl_warned = true;
        }
        let a = self.combine(nc, |c, i| self.half[self.group(c)][i] * (u[c][i] + 0.5 * h * k1[c][i]));
        let (k2, _) = self.rhs(&a);
        let b = self.combine(nc, |c, i| self.half[self.group(c)][i] * u[c][i] + 0.5 * h * k2[c][i]);
        let (k3, _) = self.rhs(&b);
        let cst = self.combine(nc, |c, i| {
            let grp = self.group(c);
            self.full[grp][i] * u[c][i] + h * self.half[grp][i] * k3[c][i]
        });
        let (k4, _) = self.rhs(&cst);
        let next = self.combine(nc, |c, i| {
            let grp = self.group(c);
            let (e, eh) = (self.full[grp][i], self.half[grp][i]);
            e * u[c][i] + h / 6.0 * (e * k1[c][i] + 2.0 * eh * (k2[c][i] + k3[c][i]) + k4[c][i])
        });

        let rates = [&u, &a, &b, &cst].map(|y| self.stage_rates(y));
        let w = [1.0, 2.0, 2.0, 1.0];
        let integrals = StageIntegrals {
            dissipation: h / 6.0 * (0..4).map(|s| w[s] * rates[s].0).sum::<f64>(),
            injection: h / 6.0 * (0..4).map(|s| w[s] * rates[s].1).sum::<f64>(),
            cfl,
        };

        let time = state.time + h;
        if let Some(idx) = first_non_finite(&next) {
            return Err(SolverError::Diverged { time, mode: self.grid.mode(idx), cfl });
        }
        let mut comps = next.into_iter();
        let mut velocity = SpectralField::from_components(self.grid, comps.by_ref().take(3).collect())?;
        // the right-hand side is projected per mode
        velocity.set_divergence_free_unchecked(true);
        let scalars = comps
            .map(|c| SpectralField::from_components(self.grid, vec![c]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((SimState { time, velocity, scalars }, integrals))
    }
}

fn dissipation_sum(g: TorusGrid, u: &[Vec<Complex64>]) -> f64 {
    u.iter().map(|c| par_sum(c.len(), |i| g.k_squared(i) * c[i].norm_sqr())).sum()
}

fn injection_sum(f: &[Vec<Complex64>], u: &[Vec<Complex64>]) -> f64 {
    f.iter()
        .zip(u)
        .map(|(fc, uc)| par_sum(fc.len(), |i| (fc[i] * uc[i].conj()).re))
        .sum()
}

fn first_non_finite(y: &Fields) -> Option<usize> {
    y.iter()
        .filter_map(|c| c.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()))
        .min()
}

/// One step from `state` under `config`. Builds a fresh integrator; use
/// [`Integrator`] directly for repeated steps.
pub fn step(state: &SimState, config: &SimConfig) -> Result<SimState, SolverError> {
    let mut integ = Integrator::new(config)?;
    let prepared = integ.prepare(state)?;
    integ.step(&prepared).map(|(s, _)| s)
}
