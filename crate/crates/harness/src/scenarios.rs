//! Initial states and forces for each named scenario.

use std::io;

use hvns_core::flow::{FlowState, ForcingSpec};
use hvns_core::spectral::{
    l2_norm, random_band_limited, random_profile, Profile, ScalarSpectrum, SpectralError, SpectralGrid, YBasis,
};
use num_complex::Complex64;
use thiserror::Error;

use crate::config::{ForcingConfig, RunConfig, Scenario};
use crate::snapshot;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("cannot load snapshot: {0}")]
    Snapshot(#[from] io::Error),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Seed mixed into the mean-profile draw of a force so it differs from the
/// oscillating part drawn with the same seed.
const MEAN_SEED_MIX: u64 = 0x5851_f42d_4c95_7f2d;

/// `psi = a sin(2 pi x) sin(pi y)`.
pub fn taylor_green_state(g: SpectralGrid, a: f64) -> FlowState {
    let mut psi = ScalarSpectrum::zeros(g, YBasis::SineY);
    psi.set_mode(1, 1, Complex64::new(0.0, -a / 2.0));
    FlowState::new(psi, Profile::zeros(g.ny(), YBasis::CosineY), 0.0).expect("sine basis on its own grid")
}

/// Shear `(a y, 0)` plus a seeded oscillation with `||omega~|| = eps`.
pub fn shear_stability_state(
    g: SpectralGrid,
    a: f64,
    eps: f64,
    seed: u64,
    kmax: usize,
) -> Result<FlowState, SpectralError> {
    let psi = random_band_limited(g, seed, kmax, YBasis::SineY)?.without_mean();
    let w = l2_norm(&psi.laplacian());
    let psi = if w > 0.0 { psi.scale(eps / w) } else { psi };
    FlowState::new(psi, Profile::linear_shear(g.ny(), a), 0.0)
}

/// Smooth seeded force with `||f~|| = amplitude` for the oscillating part
/// and `||fbar1|| = mean_amplitude`.
pub fn forcing_from(g: SpectralGrid, f: &ForcingConfig) -> Result<ForcingSpec, SpectralError> {
    let psi = random_band_limited(g, f.seed, f.kmax, YBasis::SineY)?.without_mean();
    // ||f~|| = ||grad psi_f||
    let grad = (-psi.inner(&psi.laplacian())).sqrt();
    let psi = if grad > 0.0 { psi.scale(f.amplitude / grad) } else { psi };
    let fbar = if f.mean_amplitude == 0.0 {
        Profile::zeros(g.ny(), YBasis::CosineY)
    } else {
        let p = random_profile(g.ny(), f.seed ^ MEAN_SEED_MIX, f.kmax, YBasis::CosineY);
        let n = p.l2_norm();
        if n > 0.0 {
            p.scale(f.mean_amplitude / n)
        } else {
            p
        }
    };
    ForcingSpec::new(psi, fbar, f.envelope.into())
}

/// Deterministic initial state and force of a validated config.
pub fn build_scenario(cfg: &RunConfig) -> Result<(FlowState, ForcingSpec), ScenarioError> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(ScenarioError::Config(errs));
    }
    let g = cfg.grid().map_err(|e| ScenarioError::Config(vec![e]))?;
    let init = &cfg.initial;
    let state = match cfg.scenario {
        Scenario::TaylorGreen => taylor_green_state(g, init.amplitude),
        Scenario::PureShear => FlowState::pure_shear(g, init.shear),
        Scenario::FreeDecay | Scenario::ForcedH2 => FlowState::random(g, init.seed, init.kmax, init.amplitude)?,
        Scenario::ShearStability => shear_stability_state(g, init.shear, init.perturbation, init.seed, init.kmax)?,
        Scenario::Custom => {
            let path = init.snapshot.as_ref().expect("validated");
            snapshot::read(path, g.dealias())?
        }
    };
    let forcing = match &cfg.forcing {
        Some(f) => forcing_from(g, f)?,
        None => ForcingSpec::none(g),
    };
    Ok((state, forcing))
}
