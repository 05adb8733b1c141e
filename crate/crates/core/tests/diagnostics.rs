use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nsk41_core::diagnostics::{
    diagnose, k41_statistic, k41w_statistic, lq_norm, modulus_exponent_fit, modulus_exponent_floor,
    proof_trace, shell_spectrum, sobolev_bound, spectrum_slope_fit, time_modulus, DiagnosticsError,
    DiagnosticsParams, ModulusFit,
};
use nsk41_core::solver::{run, ForcingSpec, SimConfig, SimState, SnapshotSeries, VelocityPreset};
use nsk41_core::spectral::{forward_transform, inverse_transform, PhysicalField, SpectralField, TorusGrid};

/// Vector field with `value(mode)` in component `comp` at every mode where it
/// returns `Some`, mirrored onto the conjugate mode.
fn field_from_modes(g: TorusGrid, comp: usize, value: impl Fn([i64; 3]) -> Option<f64>) -> SpectralField {
    let mut comps = vec![vec![Complex64::default(); g.len()]; 3];
    for idx in 0..g.len() {
        if g.is_nyquist(idx) {
            continue;
        }
        if let Some(v) = value(g.mode(idx)) {
            comps[comp][idx] = Complex64::new(v, 0.0);
        }
    }
    SpectralField::from_components(g, comps).unwrap()
}

fn frozen(field: &SpectralField, times: usize, spacing: f64) -> SnapshotSeries {
    let states = (0..times).map(|i| SimState::new(i as f64 * spacing, field.clone(), vec![])).collect();
    SnapshotSeries::from_snapshots(0.01, spacing, None, states).unwrap()
}

fn random_field(g: TorusGrid, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = (0..3).map(|_| (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    forward_transform(&PhysicalField::new(g, comps).unwrap())
}

#[test]
fn spectrum_of_single_mode_pair() {
    let g = TorusGrid::new(TAU, 16).unwrap();
    let a = 0.7;
    let u = field_from_modes(g, 1, |m| (m == [1, 0, 0] || m == [-1, 0, 0]).then_some(a));
    let s = shell_spectrum(&u);
    assert!((s.energy[1] - a * a).abs() < 1e-15);
    assert!(s.energy.iter().enumerate().all(|(k, e)| k == 1 || *e == 0.0));
    let z = shell_spectrum(&SpectralField::zeros(g, 3));
    assert!(z.energy.iter().all(|e| *e == 0.0));
}

#[test]
fn spectrum_matches_binning_oracle_and_total_energy() {
    let g = TorusGrid::new(1.7, 16).unwrap();
    let u = random_field(g, 3);
    let s = shell_spectrum(&u);
    let phys = inverse_transform(&u).unwrap();
    let total = phys.l2_norm_sq() / (2.0 * g.volume());
    assert!((s.total() - total).abs() <= 1e-10 * total);
    // independent binning with explicit wavenumber loops
    let n = 16usize;
    let wn = |i: usize| if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
    let mut oracle = vec![0.0; s.energy.len()];
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                let r = (wn(i1).powi(2) + wn(i2).powi(2) + wn(i3).powi(2)).sqrt();
                let idx = (i1 * n + i2) * n + i3;
                let e: f64 = (0..3).map(|c| u.component(c)[idx].norm_sqr()).sum();
                oracle[r.round() as usize] += 0.5 * e;
            }
        }
    }
    for (a, b) in s.energy.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-14 * total);
    }
    let q = s.density(g);
    let k2 = 2.0 * g.k0();
    assert!((q[2] - s.energy[2] / (4.0 * std::f64::consts::PI * k2 * k2)).abs() < 1e-15);
}

fn shell_power_law(g: TorusGrid, exponent: f64) -> SpectralField {
    // one mode pair per shell on the first axis: E(k) = |a|²
    let cut = g.dealias_cutoff();
    field_from_modes(g, 1, |m| {
        (m[1] == 0 && m[2] == 0 && m[0] != 0 && m[0].abs() <= cut).then(|| (m[0].abs() as f64).powf(exponent / 2.0))
    })
}

#[test]
fn k41_statistic_on_frozen_power_laws() {
    let g = TorusGrid::new(TAU, 32).unwrap();
    let series = frozen(&shell_power_law(g, -5.0 / 3.0), 3, 0.5);
    let t = k41_statistic(&series, 2).unwrap();
    assert!(t.rows.iter().all(|r| (r.weighted - 1.0).abs() < 1e-12));
    assert!((t.supremum - 1.0).abs() < 1e-12);
    assert!(t.non_increasing_tail);

    let series = frozen(&shell_power_law(g, -2.0), 3, 0.5);
    let t = k41_statistic(&series, 3).unwrap();
    for r in &t.rows {
        assert!((r.weighted - (r.shell as f64).powf(-1.0 / 3.0)).abs() < 1e-12);
    }
    assert_eq!(t.argmax_shell, 3);
    assert!((t.supremum - 3f64.powf(-1.0 / 3.0)).abs() < 1e-12);

    let zero = frozen(&SpectralField::zeros(g, 3), 3, 0.5);
    assert_eq!(k41_statistic(&zero, 1).unwrap().supremum, 0.0);
    assert!(matches!(k41_statistic(&zero, 11), Err(DiagnosticsError::KStarUnresolved { .. })));
    assert!(k41_statistic(&zero, 0).is_err());
}

fn k41w_fixture(g: TorusGrid, beta: f64) -> SpectralField {
    let k0 = g.k0();
    field_from_modes(g, 0, |m| {
        let n2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
        (n2 > 0.0).then(|| (k0 * n2.sqrt()).powf(-(3.0 + beta) / 2.0))
    })
}

#[test]
fn k41w_statistic_on_exact_fixture() {
    let g = TorusGrid::new(3.0, 16).unwrap();
    for beta in [1.0 / 3.0, 2.0 / 3.0, 1.0] {
        let series = frozen(&k41w_fixture(g, beta), 5, 0.25);
        let s = k41w_statistic(&series, beta, 1).unwrap();
        assert!((s.supremum - 1.0).abs() < 1e-12);
        assert!(s.rows.iter().all(|r| (r.weighted - 1.0).abs() < 1e-12));
    }
}

#[test]
fn k41w_single_mode_and_errors() {
    let g = TorusGrid::new(2.0, 16).unwrap();
    let a = 0.3;
    let u = field_from_modes(g, 2, |m| (m == [2, 1, 0] || m == [-2, -1, 0]).then_some(a));
    let series = frozen(&u, 4, 0.5);
    let beta = 0.5;
    let s = k41w_statistic(&series, beta, 1).unwrap();
    let k = g.k0() * 5f64.sqrt();
    let expect = k.powf(3.0 + beta) * 1.5 * a * a;
    assert!((s.supremum - expect).abs() < 1e-12 * expect);
    assert!(s.argmax == [2, 1, 0] || s.argmax == [-2, -1, 0]);
    assert_eq!(k41w_statistic(&frozen(&SpectralField::zeros(g, 3), 2, 1.0), beta, 1).unwrap().supremum, 0.0);
    assert!(matches!(k41w_statistic(&series, 0.0, 1), Err(DiagnosticsError::NonPositiveBeta(_))));
    // mode (2,1,0) has |n|² = 5 < 9
    assert_eq!(k41w_statistic(&series, beta, 3).unwrap().supremum, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn k41w_is_monotone_in_beta(seed in 0u64..1000, b1 in 0.05f64..1.5, b2 in 0.05f64..1.5) {
        let g = TorusGrid::new(TAU, 8).unwrap();
        let u = random_field(g, seed).dealias();
        let series = frozen(&u, 3, 0.5);
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let a = k41w_statistic(&series, lo, 1).unwrap().supremum;
        let b = k41w_statistic(&series, hi, 1).unwrap().supremum;
        prop_assert!(b >= a);
    }

    #[test]
    fn modulus_ignores_constant_offsets(seed in 0u64..1000, lag in 1usize..4) {
        let g = TorusGrid::unit(8).unwrap();
        let v = random_field(g, seed);
        let c = random_field(g, seed + 1);
        let states: Vec<SimState> = (0..6)
            .map(|i| SimState::new(0.1 * i as f64, v.scale((0.3 * i as f64).sin()), vec![]))
            .collect();
        let shifted: Vec<SimState> = states
            .iter()
            .map(|s| SimState::new(s.time, s.velocity.add(&c), vec![]))
            .collect();
        let a = SnapshotSeries::from_snapshots(0.01, 0.1, None, states).unwrap();
        let b = SnapshotSeries::from_snapshots(0.01, 0.1, None, shifted).unwrap();
        let dt = 0.1 * lag as f64;
        let (wa, wb) = (time_modulus(&a, dt).unwrap(), time_modulus(&b, dt).unwrap());
        prop_assert!((wa - wb).abs() <= 1e-12 * wa.max(1e-300));
    }
}

fn decaying_series(g: TorusGrid, t_end: f64, forcing: ForcingSpec) -> SnapshotSeries {
    let cfg = SimConfig::new(g, 0.02, 0.005, t_end, VelocityPreset::RandomBand { k_lo: 1, k_hi: 4, energy: 1.0 })
        .with_seed(21)
        .with_forcing(forcing);
    run(&cfg).unwrap()
}

#[test]
fn sobolev_split_and_closed_forms() {
    let g = TorusGrid::new(TAU, 16).unwrap();
    let mu = 0.05;
    let cfg = SimConfig::new(g, mu, 0.01, 1.0, VelocityPreset::Abc { a: 1.0, b: 1.0, c: 1.0 });
    let series = run(&cfg).unwrap();
    let alpha = 0.3;
    let r = sobolev_bound(&series, alpha, 2, Some(2.0 / 3.0)).unwrap();
    let e0 = g.volume() * 3.0;
    let exact = e0 * (1.0 - (-2.0 * mu).exp()) / (2.0 * mu);
    assert!((r.total - exact).abs() <= 1e-6 * exact, "{} vs {exact}", r.total);
    assert!((r.low + r.high - r.total).abs() <= 1e-10 * r.total);
    assert!(r.low <= r.low_bound);
    // ABC lives on shell 1, entirely below k* = 2
    assert!(r.high <= 1e-20 * r.total);

    let zero_order = sobolev_bound(&series, 0.0, 1, None).unwrap();
    let parseval: Vec<f64> = series.velocities().map(|u| u.l2_norm_sq()).collect();
    let h = series.spacing();
    let trap = h * (parseval.iter().sum::<f64>() - 0.5 * (parseval[0] + parseval[parseval.len() - 1]));
    assert!((zero_order.total - trap).abs() <= 1e-12 * trap);

    let band = decaying_series(g, 0.3, ForcingSpec::Zero);
    let r = sobolev_bound(&band, 0.3, 3, Some(2.0 / 3.0)).unwrap();
    assert!((r.low + r.high - r.total).abs() <= 1e-10 * r.total);
    assert!(r.low <= r.low_bound && r.high <= r.high_bound.unwrap() * (1.0 + 1e-12));
    assert!(!r.alpha_above_half_beta);
    assert!(sobolev_bound(&band, 0.4, 3, Some(0.5)).unwrap().alpha_above_half_beta);
}

#[test]
fn sobolev_single_steady_mode() {
    let g = TorusGrid::new(2.5, 8).unwrap();
    let a = 0.4;
    let u = field_from_modes(g, 0, |m| (m == [0, 1, 1] || m == [0, -1, -1]).then_some(a));
    let series = frozen(&u, 3, 0.5);
    let alpha = 0.7;
    let k0 = g.k0() * 2f64.sqrt();
    let expect = g.volume() * k0.powf(2.0 * alpha) * 1.0 * 2.0 * a * a;
    let r = sobolev_bound(&series, alpha, 1, None).unwrap();
    assert!((r.total - expect).abs() <= 1e-12 * expect);
}

#[test]
fn time_modulus_closed_forms() {
    let g = TorusGrid::new(2.0, 8).unwrap();
    let v = random_field(g, 9);
    let h = 0.05;
    let t_end = 1.0;
    let states: Vec<SimState> =
        (0..=20).map(|i| SimState::new(i as f64 * h, v.scale(i as f64 * h), vec![])).collect();
    let series = SnapshotSeries::from_snapshots(0.01, h, None, states).unwrap();
    let vn = v.l2_norm_sq();
    for m in [1usize, 3, 10, 19, 20] {
        let dt = m as f64 * h;
        if m == 20 {
            assert!(time_modulus(&series, dt).is_err());
            continue;
        }
        let w = time_modulus(&series, dt).unwrap();
        let exact = vn * (t_end - dt) * dt * dt;
        assert!((w - exact).abs() <= 1e-12 * exact, "m = {m}");
    }
    // Δt = T − spacing: a single interval
    let dt = t_end - h;
    let s = &series.snapshots;
    let direct = 0.5 * h * (s[19].velocity.sub(&s[0].velocity).l2_norm_sq() + s[20].velocity.sub(&s[1].velocity).l2_norm_sq());
    assert!((time_modulus(&series, dt).unwrap() - direct).abs() <= 1e-12 * direct);
    assert!(matches!(time_modulus(&series, 0.07), Err(DiagnosticsError::MisalignedLag { .. })));
    assert!(time_modulus(&series, 0.0).is_err());

    let constant = frozen(&v, 5, 0.1);
    assert_eq!(time_modulus(&constant, 0.2).unwrap(), 0.0);
}

#[test]
fn modulus_fit_on_separable_series() {
    let g = TorusGrid::unit(8).unwrap();
    let v = random_field(g, 2);
    let h = 0.01;
    let states: Vec<SimState> =
        (0..=100).map(|i| SimState::new(i as f64 * h, v.scale(i as f64 * h), vec![])).collect();
    let series = SnapshotSeries::from_snapshots(0.01, h, None, states).unwrap();
    let lags = [0.01, 0.02, 0.05, 0.1];
    let fit = modulus_exponent_fit(&series, &lags, 0.3).unwrap();
    // oracle: least squares on the analytic values
    let x: Vec<f64> = lags.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = lags.iter().map(|d: &f64| ((1.0 - d) * d * d).ln()).collect();
    let mx = x.iter().sum::<f64>() / 4.0;
    let my = y.iter().sum::<f64>() / 4.0;
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    match &fit {
        ModulusFit::Fitted { slope: s, meets_floor, floor, .. } => {
            assert!((s - slope).abs() < 1e-10);
            assert!(*meets_floor);
            assert!((floor - 0.6 / 5.6).abs() < 1e-15);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!((modulus_exponent_floor(1.0 / 3.0) - 2.0 / 17.0).abs() < 1e-15);
    let constant = frozen(&v, 11, 0.01);
    assert!(matches!(modulus_exponent_fit(&constant, &lags[..3], 0.3).unwrap(), ModulusFit::Degenerate { .. }));
    assert!(matches!(modulus_exponent_fit(&series, &[0.01, 0.02, 0.02], 0.3), Err(DiagnosticsError::TooFewPoints(2))));
}

#[test]
fn lq_norm_oracles() {
    let g = TorusGrid::new(2.0, 8).unwrap();
    let a = 0.6;
    let u = field_from_modes(g, 0, |m| (m == [1, 0, 0] || m == [-1, 0, 0]).then_some(a));
    let series = frozen(&u, 5, 0.25);
    let parseval = u.l2_norm_sq() * 1.0;
    assert!((lq_norm(&series, 2.0).unwrap() - parseval.sqrt()).abs() <= 1e-6 * parseval.sqrt());

    let c = field_from_modes(g, 2, |m| (m == [0, 0, 0]).then_some(-1.3));
    let series = frozen(&c, 3, 0.5);
    for q in [1.0, 2.5, 4.0] {
        let expect = (g.volume() * 1.0).powf(1.0 / q) * 1.3;
        assert!((lq_norm(&series, q).unwrap() - expect).abs() < 1e-12 * expect);
    }
    assert!(lq_norm(&series, 0.5).is_err());
}

/// Zero-pad a field onto a grid with twice the points per axis.
fn refine(u: &SpectralField) -> SpectralField {
    let g = u.grid();
    let fine = TorusGrid::new(g.period(), 2 * g.n()).unwrap();
    let mut comps = vec![vec![Complex64::default(); fine.len()]; u.ncomp()];
    for idx in 0..g.len() {
        let m = g.mode(idx);
        let [a, b, c] = m.map(|v| fine.index_of_wavenumber(v).unwrap());
        for (d, comp) in comps.iter_mut().enumerate() {
            comp[fine.index(a, b, c)] = u.component(d)[idx];
        }
    }
    SpectralField::from_components(fine, comps).unwrap()
}

#[test]
fn lq_norm_matches_refined_quadrature() {
    let g = TorusGrid::unit(32).unwrap();
    let cfg = SimConfig::new(g, 0.01, 0.01, 0.02, VelocityPreset::RandomBand { k_lo: 3, k_hi: 6, energy: 1.0 })
        .with_seed(4);
    let series = run(&cfg).unwrap();
    let q = 4.0;
    let mut per = Vec::new();
    for u in series.velocities() {
        let f = refine(u);
        let phys = inverse_transform(&f).unwrap();
        let mag = phys.magnitude();
        per.push(f.grid().cell_volume() * mag.iter().map(|m| m.powf(q)).sum::<f64>());
    }
    let h = series.spacing();
    let oracle = (h * (0.5 * per[0] + per[1] + 0.5 * per[2])).powf(1.0 / q);
    let got = lq_norm(&series, q).unwrap();
    assert!((got - oracle).abs() <= 1e-4 * oracle, "{got} vs {oracle}");
}

#[test]
fn slope_fit_fixtures() {
    let e: Vec<f64> = (0..20).map(|k| if k == 0 { 0.0 } else { (k as f64).powf(-5.0 / 3.0) }).collect();
    let f = spectrum_slope_fit(&e, 2, 15, 1.0, 1.0).unwrap();
    assert!((f.slope + 5.0 / 3.0).abs() < 1e-12);
    assert!((f.flatness - 1.0).abs() < 1e-12);
    let flat = vec![2.0; 10];
    assert!(spectrum_slope_fit(&flat, 1, 9, 0.5, 1.0).unwrap().slope.abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noisy: Vec<f64> =
        (0..30).map(|k| (k.max(1) as f64).powi(-2) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))).collect();
    let f = spectrum_slope_fit(&noisy, 2, 25, 1.0, 1.0).unwrap();
    assert!((f.slope + 2.0).abs() <= 0.05);
    assert!(spectrum_slope_fit(&flat, 3, 4, 1.0, 1.0).is_err());
    assert!(spectrum_slope_fit(&vec![0.0; 10], 1, 9, 1.0, 1.0).is_err());
}

#[test]
fn proof_trace_identity_holds() {
    let g = TorusGrid::new(TAU, 16).unwrap();
    for forcing in [ForcingSpec::Zero, ForcingSpec::LowMode { amplitude: 0.5 }] {
        let series = decaying_series(g, 0.4, forcing.clone());
        for (dt, delta) in [(0.02, 0.3), (0.05, 0.6), (0.1, 1.0)] {
            let t = proof_trace(&series, dt, delta, 0.3).unwrap();
            assert!(t.relative_residual <= 1e-6, "{forcing:?} {dt} {delta}: {t:?}");
            assert!(t.constants_finite && t.lhs > 0.0);
            assert!(t.lhs <= t.bound * (1.0 + 1e-9));
            if forcing == ForcingSpec::Zero {
                assert_eq!(t.j4, 0.0);
            } else {
                assert!(t.j4 != 0.0);
            }
        }
    }
}

#[test]
fn proof_trace_of_steady_state_vanishes() {
    let g = TorusGrid::unit(8).unwrap();
    let series = frozen(&SpectralField::zeros(g, 3), 6, 0.1);
    let t = proof_trace(&series, 0.2, 0.1, 0.3).unwrap();
    assert_eq!([t.lhs, t.j1, t.j2, t.j3, t.j4], [0.0; 5]);
    assert!(t.delta_opt.is_none());
    assert!(proof_trace(&series, 0.2, 0.5 * g.period(), 0.3).is_err());
}

#[test]
fn full_report() {
    let g = TorusGrid::new(TAU, 16).unwrap();
    let series = decaying_series(g, 0.2, ForcingSpec::Zero);
    let params = DiagnosticsParams {
        lags: vec![0.01, 0.02, 0.05],
        trace_lags: vec![0.02],
        deltas: vec![0.4],
        slope_range: Some((1, 5)),
        ..DiagnosticsParams::default()
    };
    let r = diagnose(&series, &params).unwrap();
    assert_eq!(r.spectra.len(), series.len());
    assert_eq!(r.modulus.len(), 3);
    assert_eq!(r.jtrace.len(), 1);
    assert_eq!(r.energy_budget.len(), series.len() - 1);
    assert!(r.modulus_fit.is_some() && r.slope_fit.is_some());
    assert_eq!(r.series.stride, 1);
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"k41w\"") && !json.contains("\"rows\":[{\"mode\""));
}
