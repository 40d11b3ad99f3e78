use std::f64::consts::PI;

use hvns_core::diagnostics::{
    check_asymptotics, check_dissipation_bound, check_velocity_bound, check_vorticity_bounds, weak_residual,
    MonitorConfig, MonitorSet,
};
use hvns_core::flow::{velocity, velocity_distance, Envelope, FlowState, ForcingSpec};
use hvns_core::spectral::{
    l2_norm, random_band_limited, random_profile, Profile, ScalarSpectrum, SpectralGrid, YBasis,
};
use hvns_core::stepper::{
    integrate, rhs, step, NoObserver, Observer, ObserverError, RunStatus, StepperConfig, TimeStep, Trajectory,
};
use num_complex::Complex64;

fn taylor_green(g: SpectralGrid) -> FlowState {
    let mut psi = ScalarSpectrum::zeros(g, YBasis::SineY);
    // sin(2 pi x) sin(pi y)
    psi.set_mode(1, 1, Complex64::new(0.0, -0.5));
    FlowState::new(psi, Profile::zeros(g.ny(), YBasis::CosineY), 0.0).unwrap()
}

fn run(s0: &FlowState, f: &ForcingSpec, dt: f64, t_end: f64, every: usize) -> Trajectory {
    let cfg = StepperConfig { dt: TimeStep::Fixed(dt), t_end, diagnostics_every: every, ..Default::default() };
    let mut mon = MonitorSet::new(s0, f, MonitorConfig::default());
    integrate(s0, f, &cfg, &mut mon, &mut NoObserver).unwrap()
}

fn fixed_steps(s0: &FlowState, f: &ForcingSpec, dt: f64, n: usize) -> FlowState {
    (0..n).fold(s0.clone(), |s, _| step(&s, f, dt))
}

/// Converts a vorticity tendency into the induced velocity change.
fn tendency_velocity(s: &FlowState) -> hvns_core::flow::VelocityPair {
    let t = rhs(s, &ForcingSpec::none(*s.grid()), 0.0);
    let psi_t = t.d_omega_osc.map_modes(|k1, k2, c| {
        let lam = -((2.0 * PI * k1 as f64).powi(2) + (PI * k2 as f64).powi(2));
        if k2 == 0 {
            c * 0.0
        } else {
            c / lam
        }
    });
    velocity(&FlowState::new(psi_t, t.d_ubar, 0.0).unwrap())
}

#[test]
fn taylor_green_advection_cancels() {
    let s = taylor_green(SpectralGrid::new(64, 64).unwrap());
    let t = rhs(&s, &ForcingSpec::none(*s.grid()), 0.0);
    assert!(l2_norm(&t.d_omega_osc) <= 1e-12 * s.osc_vorticity_l2());
    assert!(t.d_ubar.l2_norm() <= 1e-12);
}

#[test]
fn taylor_green_decays_at_horizontal_rate() {
    let s0 = taylor_green(SpectralGrid::new(64, 64).unwrap());
    let traj = run(&s0, &ForcingSpec::none(*s0.grid()), 1e-4, 0.1, 100);
    assert_eq!(traj.status, RunStatus::Completed);
    assert_eq!(traj.steps, 1000);
    let decay = (-4.0 * PI * PI * 0.1f64).exp();
    let expect = s0.psi().laplacian().scale(decay);
    let err = l2_norm(&traj.final_state.psi().laplacian().sub(&expect)) / l2_norm(&expect);
    assert!(err <= 1e-6, "{err}");
    let first = &traj.records[0];
    let last = traj.records.last().unwrap();
    let ratio = last.enstrophy / first.enstrophy;
    assert!((ratio / (decay * decay) - 1.0).abs() <= 1e-5);
    assert_eq!(last.t, 0.1);
}

#[test]
fn nonlinear_term_conserves_energy() {
    let g = SpectralGrid::new(32, 32).unwrap();
    for seed in 0..20 {
        let s = FlowState::random(g, seed, 7, 1.0).unwrap();
        let du = tendency_velocity(&s);
        let u = velocity(&s);
        let flux = du.inner(&u);
        assert!(flux.abs() <= 1e-11 * du.l2_norm() * u.l2_norm(), "seed {seed}: {flux}");
    }
}

#[test]
fn mean_update_is_consistent_to_second_order() {
    let g = SpectralGrid::new(32, 32).unwrap();
    let s = FlowState::random(g, 11, 5, 1.0).unwrap();
    let d = rhs(&s, &ForcingSpec::none(g), 0.0).d_ubar;
    let defect = |h: f64| {
        let mut euler = s.ubar().clone();
        euler.axpy(h, &d);
        step(&s, &ForcingSpec::none(g), h).ubar().sub(&euler).l2_norm()
    };
    let (a, b) = (defect(2e-5), defect(1e-5));
    let order = (a / b).log2();
    assert!((order - 2.0).abs() < 0.15, "{order}");
}

#[test]
fn third_order_self_convergence() {
    let g = SpectralGrid::new(32, 32).unwrap();
    let s0 = FlowState::random(g, 5, 4, 2.0).unwrap();
    let f = ForcingSpec::none(g);
    let t_end = 0.05;
    let dt = 0.005;
    let reference = fixed_steps(&s0, &f, dt / 8.0, 80);
    let e1 = velocity_distance(&fixed_steps(&s0, &f, dt, 10), &reference).unwrap();
    let e2 = velocity_distance(&fixed_steps(&s0, &f, dt / 2.0, 20), &reference).unwrap();
    let ratio = e1 / e2;
    assert!((6.0..=10.0).contains(&ratio), "ratio {ratio} (e1 = {e1}, e2 = {e2}, T = {t_end})");
}

/// Analytic data: coefficients decaying like `exp(-(|k1| + k2) / 2)`.
fn analytic_state(g: SpectralGrid) -> FlowState {
    let rough = random_band_limited(g, 3, g.max_band(), YBasis::SineY).unwrap();
    let psi = rough.map_modes(|k1, k2, c| c * (-0.5 * (k1.unsigned_abs() as f64 + k2 as f64)).exp());
    let bar = random_profile(g.ny(), 4, g.ny(), YBasis::CosineY);
    let coeffs = bar.coeffs().iter().enumerate().map(|(k, c)| c * (-0.5 * k as f64).exp()).collect();
    FlowState::new(psi, Profile::from_coeffs(YBasis::CosineY, coeffs), 0.0).unwrap()
}

#[test]
fn galerkin_refinement_converges_spectrally() {
    let fine = SpectralGrid::new(128, 128).unwrap();
    let data = analytic_state(fine);
    let finals: Vec<FlowState> = [8usize, 16, 32, 64]
        .iter()
        .map(|&m| {
            let g = SpectralGrid::new(m, m).unwrap();
            let s0 = data.resample(g);
            fixed_steps(&s0, &ForcingSpec::none(g), 1e-3, 50).resample(fine)
        })
        .collect();
    let d: Vec<f64> = finals.windows(2).map(|w| velocity_distance(&w[0], &w[1]).unwrap()).collect();
    // successive reduction factors grow, so no fixed power of 1/m bounds the error
    let r1 = d[0] / d[1];
    let r2 = d[1] / d[2];
    assert!(r1 > 4.0 && r2 > r1, "distances {d:?}");
}

#[test]
fn free_decay_energy_and_oscillation_vorticity_decrease() {
    let g = SpectralGrid::new(32, 32).unwrap();
    let s0 = FlowState::random(g, 8, 6, 1.0).unwrap();
    let traj = run(&s0, &ForcingSpec::none(g), 2e-3, 0.5, 1);
    for w in traj.records.windows(2) {
        assert!(w[1].energy <= w[0].energy, "t = {}", w[1].t);
        if w[0].osc_vorticity_l2 > 1e-12 {
            assert!(w[1].osc_vorticity_l2 < w[0].osc_vorticity_l2, "t = {}", w[1].t);
        }
    }
    for r in &traj.records {
        assert!((r.norms.omega_l2 - r.norms.grad_u_l2).abs() <= 1e-12 * r.norms.grad_u_l2);
        let split = r.mean_profile_l2.powi(2) + r.norms.osc_u_l2.powi(2);
        assert!((split - r.norms.u_l2.powi(2)).abs() <= 1e-12 * split);
    }
    let drift = (traj.final_state.mean_momentum() - s0.mean_momentum()).abs();
    assert!(drift <= 1e-10 * 0.5, "{drift}");
    assert!(traj.records.windows(2).all(|w| w[1].t > w[0].t));
}

#[test]
fn taylor_green_budgets_close_to_rounding() {
    // the per-mode dissipation integral is exact for a single decaying mode
    let s0 = taylor_green(SpectralGrid::new(16, 16).unwrap());
    let traj = run(&s0, &ForcingSpec::none(*s0.grid()), 1e-3, 0.05, 1);
    let scale = traj.records[0].dissipation();
    for r in &traj.records {
        assert!(r.energy_residual.abs() <= 1e-11 * scale, "{}", r.energy_residual);
        assert!(r.enstrophy_residual.abs() <= 1e-11 * r.norms.omega_x_l2.powi(2).max(scale));
    }
}

#[test]
fn budget_residuals_converge_at_second_order() {
    let g = SpectralGrid::new(32, 32).unwrap();
    let s0 = FlowState::random(g, 31, 5, 1.0).unwrap();
    let f = smooth_forcing(g, Envelope::Constant);
    // residuals at a fixed time, past the start-up transient of the stiff modes
    let at_end = |dt: f64| {
        let traj = run(&s0, &f, dt, 0.02, 1);
        let r = traj.records.last().unwrap();
        (r.energy_residual.abs(), r.enstrophy_residual.abs())
    };
    let (e1, z1) = at_end(1e-3);
    let (e2, z2) = at_end(5e-4);
    let (pe, pz) = ((e1 / e2).log2(), (z1 / z2).log2());
    assert!((pe - 2.0).abs() < 0.2 && (pz - 2.0).abs() < 0.2, "orders {pe} {pz}");
}

fn smooth_forcing(g: SpectralGrid, envelope: Envelope) -> ForcingSpec {
    let psi_f = random_band_limited(g, 77, 3, YBasis::SineY).unwrap().scale(0.05);
    let fbar = random_profile(g.ny(), 78, 3, YBasis::CosineY).scale(0.5);
    ForcingSpec::new(psi_f, fbar, envelope).unwrap()
}

#[test]
fn bounds_hold_under_constant_forcing() {
    let g = SpectralGrid::new(32, 32).unwrap();
    let s0 = FlowState::random(g, 21, 6, 1.0).unwrap();
    let f = smooth_forcing(g, Envelope::Constant);
    let traj = run(&s0, &f, 1e-3, 0.5, 5);
    assert!(traj.records.iter().all(|r| r.margins().iter().all(|m| *m >= 0.0)));
    assert!(check_velocity_bound(&traj.records, 1e-8).passed);
    assert!(check_dissipation_bound(&traj.records, 1e-8).passed);
    let (v2, v20) = check_vorticity_bounds(&traj.records, 1e-8);
    assert!(v2.passed && v20.passed);
    for w in traj.records.windows(2) {
        assert!(w[1].forcing.f_l2 >= w[0].forcing.f_l2);
        assert!(w[1].forcing.curl_sq >= w[0].forcing.curl_sq);
    }
}

#[test]
fn zero_data_velocity_is_bounded_by_forcing_integral() {
    let g = SpectralGrid::new(16, 16).unwrap();
    let f = smooth_forcing(g, Envelope::ExponentialDecay { rate: 2.0 });
    let traj = run(&FlowState::rest(g), &f, 1e-3, 0.3, 10);
    for r in &traj.records {
        assert!(r.norms.u_l2 <= r.forcing.f_l2 * (1.0 + 1e-12));
    }
}

#[test]
fn pure_shear_keeps_vorticity_and_dissipates_nothing() {
    let g = SpectralGrid::new(32, 32).unwrap();
    let s0 = FlowState::pure_shear(g, 1.0);
    let traj = run(&s0, &ForcingSpec::none(g), 0.01, 0.2, 1);
    assert_eq!(traj.final_state.ubar(), s0.ubar());
    let w0 = traj.records[0].norms.omega_l2;
    assert!((w0 - 1.0).abs() < 1e-2);
    for r in &traj.records {
        assert_eq!(r.norms.omega_l2, w0);
        assert_eq!(r.integrals.enstrophy_dissipation, 0.0);
        assert_eq!(r.energy_residual, 0.0);
    }
}

#[test]
fn twin_distance_stays_small_for_taylor_green() {
    let g = SpectralGrid::new(32, 32).unwrap();
    let s0 = taylor_green(g);
    let f = ForcingSpec::none(g);
    let delta = 1e-6;
    let cfg = StepperConfig { dt: TimeStep::Fixed(1e-3), t_end: 0.5, diagnostics_every: 50, ..Default::default() };
    let mon_cfg = MonitorConfig { twin_perturbation: Some(delta), twin_seed: 9, ..Default::default() };
    let mut mon = MonitorSet::new(&s0, &f, mon_cfg);
    let traj = integrate(&s0, &f, &cfg, &mut mon, &mut NoObserver).unwrap();
    let d0 = traj.records[0].twin_distance.unwrap();
    assert!((d0 - delta).abs() <= 1e-12 * delta);
    assert!(traj.records.iter().all(|r| r.twin_distance.unwrap() <= 100.0 * delta));
}

#[test]
fn twin_distance_at_rest_only_decays() {
    let g = SpectralGrid::new(16, 16).unwrap();
    let s0 = FlowState::rest(g);
    let f = ForcingSpec::none(g);
    let cfg = StepperConfig { dt: TimeStep::Fixed(1e-3), t_end: 0.2, diagnostics_every: 20, ..Default::default() };
    let mut mon = MonitorSet::new(&s0, &f, MonitorConfig { twin_perturbation: Some(1e-6), ..Default::default() });
    let traj = integrate(&s0, &f, &cfg, &mut mon, &mut NoObserver).unwrap();
    let d: Vec<f64> = traj.records.iter().map(|r| r.twin_distance.unwrap()).collect();
    assert!((d[0] - 1e-6).abs() < 1e-18);
    assert!(d.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn weak_form_holds_on_resolved_test_fields() {
    let g = SpectralGrid::new(32, 32).unwrap();
    let f = smooth_forcing(g, Envelope::Constant);
    for seed in 0..10 {
        let s = FlowState::random(g, seed, 6, 1.5).unwrap();
        let w = velocity(&FlowState::random(g, 1000 + seed, 8, 1.0).unwrap());
        let r = weak_residual(&s, &f, &w).unwrap();
        assert!(r.residual <= 1e-10 * r.scale, "seed {seed}: {r:?}");
        let own = weak_residual(&s, &f, &velocity(&s)).unwrap();
        assert!(own.residual <= 1e-10 * own.scale, "seed {seed}: {own:?}");
    }
}

#[test]
fn weak_form_is_blind_to_inactive_modes() {
    let g = SpectralGrid::new(32, 32).unwrap();
    let s =
        FlowState::new(random_band_limited(g, 2, 2, YBasis::SineY).unwrap(), Profile::zeros(32, YBasis::CosineY), 0.0)
            .unwrap();
    let mut psi_w = ScalarSpectrum::zeros(g, YBasis::SineY);
    psi_w.set_mode(9, 3, Complex64::new(1.0, 0.5));
    let w = velocity(&FlowState::new(psi_w, Profile::zeros(32, YBasis::CosineY), 0.0).unwrap());
    let r = weak_residual(&s, &ForcingSpec::none(g), &w).unwrap();
    // zero up to transform rounding
    let u = velocity(&s).l2_norm();
    assert!(r.residual <= 1e-13 * w.l2_norm() * u * (1.0 + u), "{r:?}");
}

#[test]
fn asymptotics_report_on_short_free_decay() {
    let g = SpectralGrid::new(16, 16).unwrap();
    let s0 = FlowState::random(g, 3, 4, 0.5).unwrap();
    let f = ForcingSpec::none(g);
    let cfg = StepperConfig { t_end: 3.0, diagnostics_every: 20, ..Default::default() };
    let mut mon = MonitorSet::new(&s0, &f, MonitorConfig { keep_profiles: true, ..Default::default() });
    let traj = integrate(&s0, &f, &cfg, &mut mon, &mut NoObserver).unwrap();
    let rep = check_asymptotics(&traj.records, mon.profiles(), 1e-3, 10.0);
    assert!(rep.converged, "{rep:?}");
    assert!(rep.cauchy_ok, "{rep:?}");
    assert!(rep.momentum_drift <= 1e-10 * 3.0);
}

#[test]
fn cfl_violation_stops_the_run() {
    let g = SpectralGrid::new(32, 32).unwrap();
    // the mean flow is not diffused, so a strong shear keeps the post-step speed
    let s0 = FlowState::pure_shear(g, 10.0);
    let traj = run(&s0, &ForcingSpec::none(g), 0.2, 1.0, 1);
    match traj.status {
        RunStatus::CflViolation { courant, limit, t } => {
            assert!(courant > limit);
            assert_eq!(t, traj.records.last().unwrap().t);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(traj.steps, 1);
}

#[test]
fn overflow_is_reported_as_non_finite() {
    let g = SpectralGrid::new(16, 16).unwrap();
    let s0 = FlowState::random(g, 1, 4, 1e200).unwrap();
    let traj = run(&s0, &ForcingSpec::none(g), 1e-3, 1.0, 1);
    assert!(matches!(traj.status, RunStatus::NonFinite { .. }), "{:?}", traj.status);
    assert!(traj.final_state.is_finite());
    assert_eq!(traj.records.len(), 1);
}

struct Counter {
    records: usize,
    snapshots: Vec<usize>,
}

impl Observer for Counter {
    fn on_record(&mut self, _: &hvns_core::diagnostics::DiagnosticsRecord) -> Result<(), ObserverError> {
        self.records += 1;
        Ok(())
    }

    fn on_snapshot(&mut self, _: &FlowState, step: usize) -> Result<(), ObserverError> {
        self.snapshots.push(step);
        Ok(())
    }
}

#[test]
fn record_and_snapshot_cadence() {
    let g = SpectralGrid::new(16, 16).unwrap();
    let s0 = taylor_green(g);
    let f = ForcingSpec::none(g);
    let cfg = StepperConfig {
        dt: TimeStep::Fixed(0.01),
        t_end: 0.105,
        diagnostics_every: 3,
        snapshot_every: Some(5),
        ..Default::default()
    };
    let mut obs = Counter { records: 0, snapshots: Vec::new() };
    let mut mon = MonitorSet::new(&s0, &f, MonitorConfig::default());
    let traj = integrate(&s0, &f, &cfg, &mut mon, &mut obs).unwrap();
    // 11 equal steps; records at 0, 3, 6, 9 and the final step
    assert_eq!(traj.steps, 11);
    assert_eq!(obs.records, 5);
    assert_eq!(obs.snapshots, vec![0, 5, 10, 11]);
    assert_eq!(traj.final_state.time(), 0.105);
}

#[test]
fn integration_is_deterministic() {
    let g = SpectralGrid::new(16, 16).unwrap();
    let s0 = FlowState::random(g, 99, 5, 1.0).unwrap();
    let f = smooth_forcing(g, Envelope::RampOff { t_off: 0.1 });
    let a = run(&s0, &f, 1e-3, 0.2, 7);
    let b = run(&s0, &f, 1e-3, 0.2, 7);
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.records, b.records);
}
