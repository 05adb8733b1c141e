use std::f64::consts::TAU;

use nsk41_core::solver::{
    energy_budget, preset_initial_conditions, run, run_from, step, ForcingSpec, Integrator, ScalarPreset,
    SimConfig, SimState, SolverError, VelocityPreset,
};
use nsk41_core::spectral::{inverse_transform, TorusGrid};

fn abc() -> VelocityPreset {
    VelocityPreset::Abc { a: 1.0, b: 1.0, c: 1.0 }
}

fn band(k_lo: usize, k_hi: usize, energy: f64) -> VelocityPreset {
    VelocityPreset::RandomBand { k_lo, k_hi, energy }
}

fn max_pointwise_error(state: &SimState, exact: impl Fn([f64; 3]) -> [f64; 3]) -> f64 {
    let g = state.velocity.grid();
    let phys = inverse_transform(&state.velocity).unwrap();
    let mut err: f64 = 0.0;
    for idx in 0..g.len() {
        let (a, b, c) = g.unflatten(idx);
        let e = exact(g.point(a, b, c));
        for d in 0..3 {
            err = err.max((phys.component(d)[idx] - e[d]).abs());
        }
    }
    err
}

#[test]
fn zero_state_stays_zero() {
    let cfg = SimConfig::new(TorusGrid::unit(8).unwrap(), 0.1, 0.01, 0.1, VelocityPreset::Zero);
    let series = run(&cfg).unwrap();
    assert!(series.snapshots.iter().all(|s| s.velocity.max_abs() == 0.0));
    let budget = energy_budget(&series);
    assert!(budget.rows.iter().all(|r| r.energy_change == 0.0 && r.dissipation == 0.0 && r.residual == 0.0));
}

#[test]
fn shear_decays_as_heat_equation() {
    let p = 3.0;
    let mu = 0.05;
    let g = TorusGrid::new(p, 16).unwrap();
    let cfg = SimConfig::new(g, mu, 1e-3, 1.0, VelocityPreset::Shear { amplitude: 1.0 }).with_stride(1000);
    let series = run(&cfg).unwrap();
    let last = series.snapshots.last().unwrap();
    assert!((last.time - 1.0).abs() < 1e-12);
    let k = TAU / p;
    let decay = (-mu * k * k).exp();
    let err = max_pointwise_error(last, |x| [decay * (k * x[1]).cos(), 0.0, 0.0]);
    assert!(err <= 1e-8, "shear error {err:e}");
}

#[test]
fn abc_flow_decays_exactly() {
    let mu = 1e-2;
    let g = TorusGrid::new(TAU, 32).unwrap();
    let cfg = SimConfig::new(g, mu, 1e-3, 1.0, abc()).with_stride(250);
    let series = run(&cfg).unwrap();
    assert_eq!(series.len(), 5);
    for s in &series.snapshots {
        let d = (-mu * s.time).exp();
        let err = max_pointwise_error(s, |x| {
            [
                d * (x[2].sin() + x[1].cos()),
                d * (x[0].sin() + x[2].cos()),
                d * (x[1].sin() + x[0].cos()),
            ]
        });
        assert!(err <= 1e-8, "t = {}: {err:e}", s.time);
    }
    let e0 = series.steps[0].energy;
    assert!((e0 - 1.5).abs() < 1e-12);
    for r in &series.steps {
        let exact = e0 * (-2.0 * mu * r.time).exp();
        assert!((r.energy - exact).abs() <= 1e-8 * exact);
    }
    // residual per unit time, relative to the physical initial energy
    let budget = energy_budget(&series);
    let norm0 = 2.0 * g.volume() * e0;
    for row in &budget.rows {
        assert!(row.residual.abs() <= 1e-6 * norm0 * (row.t_end - row.t_start));
    }
}

#[test]
fn three_steps_give_four_states() {
    let g = TorusGrid::unit(8).unwrap();
    let cfg = SimConfig::new(g, 0.01, 0.01, 0.03, abc());
    let series = run(&cfg).unwrap();
    assert_eq!(series.len(), 4);
    assert_eq!(series.steps.len(), 4);
    assert_eq!(series.times(), vec![0.0, 0.01, 0.02, 0.03]);
}

#[test]
fn runs_are_deterministic() {
    let g = TorusGrid::unit(16).unwrap();
    let cfg = SimConfig::new(g, 0.01, 0.005, 0.1, band(2, 5, 1.0))
        .with_seed(7)
        .with_forcing(ForcingSpec::Band { k_lo: 1, k_hi: 2, amplitude: 0.5 });
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.steps, b.steps);
    assert!(a.snapshots.last().unwrap().velocity.bit_eq(&b.snapshots.last().unwrap().velocity));
    let other = run(&cfg.clone().with_seed(8)).unwrap();
    assert_ne!(a.steps, other.steps);
}

#[test]
fn inviscid_galerkin_energy_is_conserved() {
    let g = TorusGrid::unit(16).unwrap();
    let cfg = SimConfig::new(g, 0.0, 1e-3, 1.0, band(1, 4, 0.5)).with_seed(3).inviscid_test_mode();
    let series = run(&cfg).unwrap();
    let e0 = series.steps[0].energy;
    let drift = series.steps.iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max) / e0;
    assert!(drift <= 1e-8, "relative drift {drift:e}");
    // the flow is genuinely nonlinear over the run
    let s0 = &series.snapshots[0].velocity;
    let s1 = &series.snapshots.last().unwrap().velocity;
    assert!(s1.sub(s0).l2_norm_sq() > 1e-3 * s0.l2_norm_sq());
}

#[test]
fn inviscid_requires_test_flag() {
    let g = TorusGrid::unit(8).unwrap();
    let cfg = SimConfig::new(g, 0.0, 1e-3, 0.01, abc());
    assert!(matches!(run(&cfg), Err(SolverError::InvalidConfig(_))));
    let bad_dt = SimConfig::new(g, 0.1, 0.0, 0.01, abc());
    assert!(bad_dt.validate().is_err());
    let short = SimConfig::new(g, 0.1, 0.1, 0.01, abc());
    assert!(short.validate().is_err());
}

fn budget_residual(dt: f64) -> f64 {
    let g = TorusGrid::unit(16).unwrap();
    let cfg = SimConfig::new(g, 0.02, dt, 0.8, band(1, 4, 1.0))
        .with_seed(11)
        .with_forcing(ForcingSpec::LowMode { amplitude: 1.0 })
        .with_stride((0.4 / dt).round() as usize);
    let b = energy_budget(&run(&cfg).unwrap());
    b.rows.iter().map(|r| r.residual.abs()).sum()
}

#[test]
fn budget_residual_is_fourth_order() {
    let r: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dt| budget_residual(dt)).collect();
    let orders: Vec<f64> = r.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    assert!(orders.iter().all(|&o| o >= 3.5), "residuals {r:?}, orders {orders:?}");
}

#[test]
fn injection_matches_real_space_quadrature() {
    let g = TorusGrid::new(2.0, 16).unwrap();
    let cfg = SimConfig::new(g, 0.05, 0.01, 0.05, band(1, 3, 1.0))
        .with_seed(5)
        .with_forcing(ForcingSpec::LowMode { amplitude: 0.7 });
    let series = run(&cfg).unwrap();
    let f = inverse_transform(&series.forcing).unwrap();
    let k = TAU / 2.0;
    for (i, s) in series.snapshots.iter().enumerate() {
        let u = inverse_transform(&s.velocity).unwrap();
        let mut q = 0.0;
        for idx in 0..g.len() {
            let (a, b, c) = g.unflatten(idx);
            let x = g.point(a, b, c);
            // the forcing preset is an analytic field, sampled here independently
            let fx = [0.7 * (k * x[2]).sin(), 0.7 * (k * x[0]).sin(), 0.7 * (k * x[1]).sin()];
            q += (0..3).map(|d| fx[d] * u.component(d)[idx]).sum::<f64>();
            assert!((f.component(0)[idx] - fx[0]).abs() < 1e-12);
        }
        q *= g.cell_volume();
        let rec = series.record_at_snapshot(i);
        assert!((rec.injection_rate - q).abs() <= 1e-12 * q.abs().max(1.0), "{} vs {q}", rec.injection_rate);
    }
}

#[test]
fn velocity_stays_divergence_free() {
    let g = TorusGrid::new(5.0, 16).unwrap();
    let cfg = SimConfig::new(g, 0.01, 0.01, 0.3, band(1, 5, 2.0))
        .with_seed(9)
        .with_forcing(ForcingSpec::Band { k_lo: 1, k_hi: 2, amplitude: 1.0 });
    let mut integ = Integrator::new(&cfg).unwrap();
    let mut state = integ.prepare(&preset_initial_conditions("random-band(1,5,2.0)", g, 9).unwrap()).unwrap();
    for _ in 0..cfg.steps() {
        state = integ.step(&state).unwrap().0;
        let u = &state.velocity;
        let norm = u.coefficient_energy().sqrt();
        for idx in 0..g.len() {
            let k = g.wavevector(idx);
            let dot: num_complex::Complex64 = (0..3).map(|d| u.component(d)[idx] * k[d]).sum();
            assert!(dot.norm() <= 1e-10 * norm);
        }
    }
}

#[test]
fn scalar_means_are_conserved() {
    let g = TorusGrid::unit(16).unwrap();
    let cfg = SimConfig::new(g, 0.02, 0.005, 0.25, band(1, 4, 1.0))
        .with_seed(2)
        .with_scalars(ScalarPreset::Checkerboard, vec![0.01, 0.03]);
    let series = run(&cfg).unwrap();
    let m0: Vec<f64> = series.snapshots[0].scalars.iter().map(|s| s.component(0)[0].re).collect();
    assert!((m0[0] - 0.5).abs() < 1e-14 && (m0[1] - 0.5).abs() < 1e-14);
    for s in &series.snapshots {
        for (chi, m) in s.scalars.iter().zip(&m0) {
            assert!((chi.component(0)[0].re - m).abs() <= 1e-12);
            assert!(chi.component(0)[0].im.abs() <= 1e-12);
        }
    }
}

#[test]
fn single_step_matches_integrator() {
    let g = TorusGrid::unit(8).unwrap();
    let cfg = SimConfig::new(g, 0.05, 0.01, 0.01, band(1, 2, 1.0)).with_seed(4);
    let s0 = preset_initial_conditions("random-band(1,2,1.0)", g, 4).unwrap();
    let one = step(&s0, &cfg).unwrap();
    let series = run_from(&cfg, s0).unwrap();
    assert!(one.velocity.bit_eq(&series.snapshots[1].velocity));
}

#[test]
fn blow_up_is_reported() {
    let g = TorusGrid::unit(16).unwrap();
    let cfg = SimConfig::new(g, 1e-4, 0.5, 100.0, band(2, 5, 1e4)).with_seed(1);
    match run(&cfg) {
        Err(SolverError::Diverged { time, cfl, .. }) => {
            assert!(time > 0.0 && cfl.is_finite());
        }
        other => panic!("expected divergence, got {:?}", other.map(|s| s.len())),
    }
}

#[test]
fn scalar_count_must_match() {
    let g = TorusGrid::unit(8).unwrap();
    let cfg = SimConfig::new(g, 0.05, 0.01, 0.01, abc()).with_scalars(ScalarPreset::Smooth, vec![0.1]);
    assert!(cfg.validate().is_err());
}
