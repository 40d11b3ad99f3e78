use std::f64::consts::PI;

use hvns_core::flow::{from_velocity, sobolev_norms, velocity, vorticity, FlowState, VelocityPair};
use hvns_core::spectral::{
    decompose_mean_osc, dx, dy, l2_norm, random_band_limited, to_physical, Profile, ScalarSpectrum, SpectralGrid,
    YBasis,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid() -> SpectralGrid {
    SpectralGrid::new(32, 24).unwrap()
}

/// `int (v_x - u_y)^2` by quadrature on a refined grid, independent of Parseval.
fn vorticity_sq_by_quadrature(vel: &VelocityPair) -> f64 {
    let fine = SpectralGrid::new(128, 96).unwrap();
    let vx = to_physical(&dx(&vel.v).resample(fine));
    let uy = to_physical(&dy(&vel.u).resample(fine));
    let diff: Vec<f64> = vx.values().iter().zip(uy.values()).map(|(a, b)| (a - b) * (a - b)).collect();
    hvns_core::spectral::PhysicalField::from_values(fine, diff).integrate()
}

#[test]
fn taylor_green_h2_norm_matches_closed_form() {
    let g = grid();
    let mut psi = ScalarSpectrum::zeros(g, YBasis::SineY);
    psi.set_mode(1, 1, Complex64::new(0.0, -0.5));
    let s = FlowState::new(psi, Profile::zeros(g.ny(), YBasis::CosineY), 0.0).unwrap();
    let n = sobolev_norms(&s);
    let (kx, ky) = (2.0 * PI, PI);
    let factor = 1.0 + kx * kx + ky * ky + kx.powi(4) + kx * kx * ky * ky + ky.powi(4);
    let expect = (0.25 * (PI * PI + 4.0 * PI * PI) * factor).sqrt();
    assert!((n.h2_norm - expect).abs() <= 1e-12 * expect);
    assert!((n.u_l2 - PI / 2.0).abs() < 1e-13);
    assert!((n.v_l2 - PI).abs() < 1e-13);
}

#[test]
fn pure_shear_norms_match_projected_series() {
    let g = SpectralGrid::new(64, 64).unwrap();
    let n = sobolev_norms(&FlowState::pure_shear(g, 1.0));
    // the cosine projection of y has u_y = sum over odd k < ny of (4 / (pi k)) sin(pi k y)
    let oracle: f64 = (1..64).step_by(2).map(|k| 8.0 / (PI * PI * (k * k) as f64)).sum::<f64>().sqrt();
    assert!((n.uy_l2 - oracle).abs() < 1e-13);
    assert!((n.uy_l2 - 1.0).abs() < 5e-3);
    assert_eq!(n.ux_l2, 0.0);
    assert_eq!(n.v_l2, 0.0);
    assert!((n.omega_l2 - oracle).abs() < 1e-13);
}

#[test]
fn non_solenoidal_input_is_projected_to_divergence_free() {
    let g = grid();
    let mut u = ScalarSpectrum::zeros(g, YBasis::CosineY);
    u.set_mode(1, 1, Complex64::new(0.5, 0.0));
    let v = ScalarSpectrum::zeros(g, YBasis::SineY);
    let s = from_velocity(&u, &v).unwrap();
    let out = velocity(&s);
    assert!(l2_norm(&out.divergence()) <= 1e-13 * (1.0 + l2_norm(&out.u)));
    assert!(l2_norm(&out.v) > 0.0);
}

#[test]
fn identities_on_hundred_random_states() {
    let g = grid();
    for seed in 0..100 {
        let s = FlowState::random(g, seed, 7, 1.0).unwrap();
        let n = sobolev_norms(&s);
        assert!((n.omega_l2 - n.grad_u_l2).abs() <= 1e-12 * n.grad_u_l2);
        assert!((n.omega_x_l2 - n.grad_ux_l2).abs() <= 1e-12 * n.grad_ux_l2);
    }
}

fn state_strategy() -> impl Strategy<Value = FlowState> {
    (any::<u64>(), 1usize..=7, 0.1f64..10.0).prop_map(|(seed, k, a)| FlowState::random(grid(), seed, k, a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn velocity_is_divergence_free(s in state_strategy()) {
        let vel = velocity(&s);
        let n = sobolev_norms(&s);
        prop_assert!(l2_norm(&vel.divergence()) <= 1e-13 * (1.0 + n.grad_u_l2));
        let walls = to_physical(&vel.v).max_wall_abs();
        prop_assert!(walls <= 1e-13 * (1.0 + to_physical(&vel.v).max_abs()));
    }

    #[test]
    fn vorticity_norm_equals_velocity_gradient_norm(s in state_strategy()) {
        let n = sobolev_norms(&s);
        prop_assert!((n.omega_l2 - n.grad_u_l2).abs() <= 1e-12 * n.grad_u_l2);
        prop_assert!((n.omega_x_l2 - n.grad_ux_l2).abs() <= 1e-12 * n.grad_ux_l2.max(1e-300));
        let quad = vorticity_sq_by_quadrature(&velocity(&s));
        prop_assert!((quad - n.omega_l2 * n.omega_l2).abs() <= 1e-10 * quad);
    }

    #[test]
    fn wall_poincare_holds(s in state_strategy()) {
        let n = sobolev_norms(&s);
        prop_assert!(n.v_l2 <= n.vy_l2 * (1.0 + 1e-12));
    }

    #[test]
    fn from_velocity_inverts_velocity(s in state_strategy()) {
        let vel = velocity(&s);
        let back = from_velocity(&vel.u, &vel.v).unwrap();
        let d = hvns_core::flow::velocity_distance(&back, &s).unwrap();
        prop_assert!(d <= 1e-12 * (2.0 * s.energy()).sqrt());
    }

    #[test]
    fn mean_oscillation_split_is_orthogonal(seed in any::<u64>(), cos in any::<bool>()) {
        let basis = if cos { YBasis::CosineY } else { YBasis::SineY };
        let g = random_band_limited(grid(), seed, 7, basis).unwrap();
        let (bar, tilde) = decompose_mean_osc(&g);
        let total = g.inner(&g);
        prop_assert!((total - bar.inner(&bar) - tilde.inner(&tilde)).abs() <= 1e-12 * total);
        prop_assert_eq!(bar.to_spectrum(*g.grid()).add(&tilde), g);
    }

    #[test]
    fn mean_vorticity_is_minus_mean_shear_derivative(s in state_strategy()) {
        let (_, bar) = vorticity(&s);
        let uy = dy(&velocity(&s).u).mean_profile();
        prop_assert_eq!(bar, uy.scale(-1.0));
    }
}
