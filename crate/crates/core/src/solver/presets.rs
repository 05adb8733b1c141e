use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ForcingSpec, ScalarPreset, VelocityPreset};
use super::{SimState, SolverError};
use crate::spectral::{forward_transform, leray_project, PhysicalField, SpectralField, TorusGrid};

fn vector_from_fn(grid: TorusGrid, f: impl Fn([f64; 3]) -> [f64; 3]) -> SpectralField {
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

fn scalar_from_fn(grid: TorusGrid, f: impl Fn([f64; 3]) -> f64) -> SpectralField {
    forward_transform(&PhysicalField::new(grid, vec![grid.sample(f)]).expect("one component"))
}

/// Unit vectors spanning the plane orthogonal to `k`.
fn transverse_basis(k: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    let kh = [k[0] / kn, k[1] / kn, k[2] / kn];
    // cross with the axis least aligned with k
    let axis = (0..3)
        .min_by(|&a, &b| kh[a].abs().total_cmp(&kh[b].abs()))
        .unwrap_or(0);
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    };
    let e1 = cross(kh, e);
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let e2 = cross(kh, e1);
    (e1, e2)
}

/// Solenoidal field with unit-magnitude random-phase coefficients on the
/// dealiased modes of shells `k_lo..=k_hi`.
fn random_band(grid: TorusGrid, k_lo: usize, k_hi: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut comps = vec![vec![Complex64::default(); grid.len()]; 3];
    for idx in 0..grid.len() {
        let shell = grid.shell(idx);
        if shell < k_lo || shell > k_hi || !grid.is_dealiased_mode(idx) {
            continue;
        }
        let conj = grid.conjugate_index(idx);
        if conj < idx {
            continue;
        }
        let (e1, e2) = transverse_basis(grid.wavevector(idx));
        let p1 = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        let p2 = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        for d in 0..3 {
            let v = p1 * e1[d] + p2 * e2[d];
            comps[d][idx] = v;
            comps[d][conj] = v.conj();
        }
    }
    let mut f = SpectralField::from_components(grid, comps).expect("three components");
    f.set_divergence_free_unchecked(true);
    f
}

/// Velocity field of a named preset. Every preset is solenoidal and zero-mean.
pub fn velocity_preset(
    preset: &VelocityPreset,
    grid: TorusGrid,
    seed: u64,
) -> Result<SpectralField, SolverError> {
    let k = grid.k0();
    let field = match *preset {
        VelocityPreset::Zero => SpectralField::zeros(grid, 3),
        VelocityPreset::Abc { a, b, c } => vector_from_fn(grid, |x| {
            [
                a * (k * x[2]).sin() + c * (k * x[1]).cos(),
                b * (k * x[0]).sin() + a * (k * x[2]).cos(),
                c * (k * x[1]).sin() + b * (k * x[0]).cos(),
            ]
        }),
        VelocityPreset::Shear { amplitude } => {
            vector_from_fn(grid, |x| [amplitude * (k * x[1]).cos(), 0.0, 0.0])
        }
        VelocityPreset::TaylorGreen { amplitude } => vector_from_fn(grid, |x| {
            let (s1, c1) = (k * x[0]).sin_cos();
            let (s2, c2) = (k * x[1]).sin_cos();
            let c3 = (k * x[2]).cos();
            [amplitude * s1 * c2 * c3, -amplitude * c1 * s2 * c3, 0.0]
        }),
        VelocityPreset::RandomBand { k_lo, k_hi, energy } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_band(grid, k_lo, k_hi, &mut rng);
            let e = 0.5 * f.coefficient_energy();
            if e == 0.0 {
                return Err(SolverError::InvalidConfig(format!(
                    "random-band({k_lo},{k_hi}) has no resolved modes at N = {}",
                    grid.n()
                )));
            }
            f.scale((energy / e).sqrt())
        }
    };
    // round-off level gradient parts are removed so the tag holds exactly
    Ok(leray_project(&field).expect("vector field"))
}

/// Scalar species `χ₁..χ_I` of a named preset, summing to one pointwise.
pub fn scalar_preset(
    preset: ScalarPreset,
    grid: TorusGrid,
    count: usize,
) -> Result<Vec<SpectralField>, SolverError> {
    if count < 2 {
        return Err(SolverError::InvalidConfig("scalar presets need at least two species".into()));
    }
    let k = grid.k0();
    let p = grid.period();
    let mut species: Vec<SpectralField> = match preset {
        ScalarPreset::Checkerboard => {
            let cell = |x: f64| (2.0 * x / p).floor() as i64;
            let first = scalar_from_fn(grid, |x| {
                if (cell(x[0]) + cell(x[1]) + cell(x[2])).rem_euclid(2) == 0 {
                    1.0
                } else {
                    0.0
                }
            });
            let mut v = vec![first];
            v.extend((1..count - 1).map(|_| SpectralField::zeros(grid, 1)));
            v
        }
        ScalarPreset::Smooth => {
            let inv = 1.0 / count as f64;
            let amp = 0.6 * inv / (count - 1) as f64;
            (0..count - 1)
                .map(|i| {
                    let ph = i as f64 * std::f64::consts::PI / 3.0;
                    scalar_from_fn(grid, |x| {
                        inv + amp
                            * (k * x[0] + ph).sin()
                            * (k * x[1] + 2.0 * ph).cos()
                            * (k * x[2] + 3.0 * ph).cos()
                    })
                })
                .collect()
        }
    };
    // the last species carries the remainder
    let mut rest = scalar_from_fn(grid, |_| 1.0);
    for s in &species {
        rest = rest.sub(s);
    }
    species.push(rest);
    Ok(species)
}

/// Time-independent forcing field of a named preset.
pub fn forcing_field(spec: &ForcingSpec, grid: TorusGrid, seed: u64) -> SpectralField {
    let k = grid.k0();
    match *spec {
        ForcingSpec::Zero => SpectralField::zeros(grid, 3),
        ForcingSpec::LowMode { amplitude } => {
            let f = vector_from_fn(grid, |x| {
                [
                    amplitude * (k * x[2]).sin(),
                    amplitude * (k * x[0]).sin(),
                    amplitude * (k * x[1]).sin(),
                ]
            });
            leray_project(&f).expect("vector field")
        }
        ForcingSpec::Band { k_lo, k_hi, amplitude } => {
            // decorrelate from a random-band initial condition drawn with the same seed
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            let f = random_band(grid, k_lo, k_hi, &mut rng);
            let ms = f.coefficient_energy();
            if ms == 0.0 {
                return f;
            }
            f.scale(amplitude / ms.sqrt())
        }
    }
}

/// Build a state from a preset name: `zero`, `abc`, `shear`,
/// `taylor-green-3d`, `random-band(k_lo,k_hi,E0)` or `checkerboard-scalar`
/// (fluid at rest carrying two checkerboard species).
pub fn preset_initial_conditions(name: &str, grid: TorusGrid, seed: u64) -> Result<SimState, SolverError> {
    let name = name.trim();
    let (velocity, scalars) = match name {
        "zero" => (VelocityPreset::Zero, None),
        "abc" => (VelocityPreset::Abc { a: 1.0, b: 1.0, c: 1.0 }, None),
        "shear" => (VelocityPreset::Shear { amplitude: 1.0 }, None),
        "taylor-green-3d" => (VelocityPreset::TaylorGreen { amplitude: 1.0 }, None),
        "checkerboard-scalar" => (VelocityPreset::Zero, Some(ScalarPreset::Checkerboard)),
        other => (parse_velocity_preset(other)?, None),
    };
    let u = velocity_preset(&velocity, grid, seed)?;
    let chi = match scalars {
        Some(p) => scalar_preset(p, grid, 2)?,
        None => Vec::new(),
    };
    Ok(SimState { time: 0.0, velocity: u, scalars: chi })
}

/// Parse a velocity preset name, including the parametrized
/// `random-band(k_lo,k_hi,E0)` form.
pub fn parse_velocity_preset(name: &str) -> Result<VelocityPreset, SolverError> {
    let name = name.trim();
    match name {
        "zero" => return Ok(VelocityPreset::Zero),
        "abc" => return Ok(VelocityPreset::Abc { a: 1.0, b: 1.0, c: 1.0 }),
        "shear" => return Ok(VelocityPreset::Shear { amplitude: 1.0 }),
        "taylor-green-3d" => return Ok(VelocityPreset::TaylorGreen { amplitude: 1.0 }),
        _ => {}
    }
    let unknown = || SolverError::UnknownPreset(name.to_string());
    let args = name
        .strip_prefix("random-band(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(unknown)?;
    let parts: Vec<&str> = args.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(unknown());
    }
    let k_lo = parts[0].parse().map_err(|_| unknown())?;
    let k_hi = parts[1].parse().map_err(|_| unknown())?;
    let energy = parts[2].parse().map_err(|_| unknown())?;
    Ok(VelocityPreset::RandomBand { k_lo, k_hi, energy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{derivative, inverse_transform, DerivativeOp};

    #[test]
    fn presets_are_solenoidal_and_zero_mean() {
        let g = TorusGrid::new(3.0, 16).unwrap();
        for name in ["zero", "abc", "shear", "taylor-green-3d", "random-band(2,4,0.5)"] {
            let s = preset_initial_conditions(name, g, 1).unwrap();
            assert!(s.velocity.is_divergence_free());
            let div = derivative(&s.velocity, DerivativeOp::Divergence).unwrap();
            assert!(div.max_abs() <= 1e-12, "{name}");
            for c in 0..3 {
                assert!(s.velocity.component(c)[0].norm() < 1e-15, "{name}");
            }
        }
    }

    #[test]
    fn random_band_energy_and_support() {
        let g = TorusGrid::unit(32).unwrap();
        let s = preset_initial_conditions("random-band(3,6,1.0)", g, 42).unwrap();
        let e = 0.5 * s.velocity.coefficient_energy();
        assert!((e - 1.0).abs() < 1e-12);
        for idx in 0..g.len() {
            let m: f64 = (0..3).map(|c| s.velocity.component(c)[idx].norm_sqr()).sum();
            if m > 0.0 {
                assert!((3..=6).contains(&g.shell(idx)));
            }
        }
        // same seed, same field
        let again = preset_initial_conditions("random-band(3,6,1.0)", g, 42).unwrap();
        assert!(s.velocity.bit_eq(&again.velocity));
    }

    #[test]
    fn taylor_green_divergence_symbolic() {
        // ∂x(sin x cos y cos z) + ∂y(−cos x sin y cos z) = 0 identically
        let g = TorusGrid::unit(16).unwrap();
        let s = preset_initial_conditions("taylor-green-3d", g, 0).unwrap();
        let phys = inverse_transform(&s.velocity).unwrap();
        let x = g.point(3, 5, 7);
        let v = phys.component(0)[g.index(3, 5, 7)];
        assert!((v - x[0].sin() * x[1].cos() * x[2].cos()).abs() < 1e-14);
    }

    #[test]
    fn scalar_presets_sum_to_one() {
        let g = TorusGrid::unit(16).unwrap();
        for preset in [ScalarPreset::Checkerboard, ScalarPreset::Smooth] {
            for count in [2, 3] {
                let s = scalar_preset(preset, g, count).unwrap();
                let total = s.iter().skip(1).fold(s[0].clone(), |acc, f| acc.add(f));
                let phys = inverse_transform(&total).unwrap();
                assert!(phys.component(0).iter().all(|v| (v - 1.0).abs() < 1e-13));
            }
        }
        let smooth = scalar_preset(ScalarPreset::Smooth, g, 2).unwrap();
        let phys = inverse_transform(&smooth[0]).unwrap();
        assert!(phys.component(0).iter().all(|v| (0.2 - 1e-12..=0.8 + 1e-12).contains(v)));
        assert!(scalar_preset(ScalarPreset::Smooth, g, 1).is_err());
    }

    #[test]
    fn unknown_preset_is_rejected() {
        let g = TorusGrid::unit(8).unwrap();
        assert!(matches!(
            preset_initial_conditions("vortex-ring", g, 0),
            Err(SolverError::UnknownPreset(_))
        ));
        assert!(parse_velocity_preset("random-band(1,2)").is_err());
    }
}
