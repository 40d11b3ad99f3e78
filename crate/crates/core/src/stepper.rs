//! Time integration: oscillation vorticity transport with exact horizontal
//! diffusion (integrating factor) and the inviscid mean-flow equation, advanced
//! by a three-stage third-order Runge-Kutta scheme.

use std::f64::consts::PI;

use thiserror::Error;

use crate::diagnostics::{DiagnosticsRecord, MonitorSet};
use crate::flow::{velocity, FlowState, ForcingSpec};
use crate::spectral::{
    dx, dy, laplacian_symbol, to_physical, to_spectral_unchecked, PhysicalField, Profile, ScalarSpectrum, SpectralGrid,
    YBasis,
};

/// Time-step selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// Nominal step; shortened uniformly so that the run lands on `t_end`.
    Fixed(f64),
    /// CFL-limited step recomputed every step.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: TimeStep,
    pub cfl: f64,
    pub dt_max: f64,
    pub t_end: f64,
    /// Snapshot cadence in steps; `None` disables snapshots.
    pub snapshot_every: Option<usize>,
    pub diagnostics_every: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: TimeStep::Auto,
            cfl: 0.5,
            dt_max: 0.01,
            t_end: 1.0,
            snapshot_every: None,
            diagnostics_every: 1,
        }
    }
}

impl StepperConfig {
    /// Every violated invariant, one message each.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                errs.push(format!("dt must be positive and finite, got {dt}"));
            }
        }
        if !(self.cfl.is_finite() && self.cfl > 0.0) {
            errs.push(format!("cfl must be positive and finite, got {}", self.cfl));
        }
        if !(self.dt_max.is_finite() && self.dt_max > 0.0) {
            errs.push(format!("dt_max must be positive and finite, got {}", self.dt_max));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            errs.push(format!("t_end must be finite and nonnegative, got {}", self.t_end));
        }
        if self.snapshot_every == Some(0) {
            errs.push("snapshot_every must be at least 1".into());
        }
        if self.diagnostics_every == 0 {
            errs.push("diagnostics_every must be at least 1".into());
        }
        errs
    }
}

/// Right-hand side of the vorticity and mean-flow equations, diffusion excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub d_omega_osc: ScalarSpectrum,
    pub d_ubar: Profile,
}

fn profile_values(p: &Profile, grid: &SpectralGrid) -> Vec<f64> {
    (0..=grid.ny()).map(|j| p.evaluate(grid.y(j))).collect()
}

/// `d omega~ = -[u omega~_x + v (omega~_y - ubar_yy)]~ + env (curl f)~` and
/// `d ubar = -dy mean(v u~) + env fbar1`, with all products dealiased.
pub fn rhs(s: &FlowState, f: &ForcingSpec, t: f64) -> Tendency {
    let g = *s.grid();
    let nx = g.nx();
    let psi = s.psi().dealiased();
    let ubar = s.ubar().truncated(g.ky_cut());
    let w = psi.laplacian();

    let mut u = to_physical(&dy(&psi)).values().to_vec();
    let v = to_physical(&dx(&psi));
    let wx = to_physical(&dx(&w));
    let mut wy = to_physical(&dy(&w)).values().to_vec();
    let ub = profile_values(&ubar, &g);
    let ubyy = profile_values(&ubar.dy().dy(), &g);

    // u currently holds psi_y = -u~
    let mut flux = vec![0.0; g.len()];
    for j in 0..=g.ny() {
        for i in 0..nx {
            let k = j * nx + i;
            flux[k] = -v.values()[k] * u[k];
            u[k] = ub[j] - u[k];
            wy[k] -= ubyy[j];
        }
    }
    let adv: Vec<f64> = (0..g.len()).map(|k| u[k] * wx.values()[k] + v.values()[k] * wy[k]).collect();

    let mut n = to_spectral_unchecked(&PhysicalField::from_values(g, adv), YBasis::SineY);
    n.dealias_in_place();
    let mut d_omega = n.without_mean().scale(-1.0);

    let mut mean_flux = to_spectral_unchecked(&PhysicalField::from_values(g, flux), YBasis::SineY);
    mean_flux.dealias_in_place();
    let mut d_ubar = mean_flux.mean_profile().dy().scale(-1.0);

    let env = f.envelope().value(t);
    if env != 0.0 && !f.is_zero() {
        d_omega.axpy(env, &f.psi_f().laplacian());
        d_ubar.axpy(env, f.fbar1());
    }
    Tendency { d_omega_osc: d_omega, d_ubar }
}

/// Tendency expressed on the prognostic variables `(psi, ubar)`.
struct Increment {
    psi: ScalarSpectrum,
    ubar: Profile,
}

fn increment(s: &FlowState, f: &ForcingSpec, t: f64) -> Increment {
    let Tendency { d_omega_osc, d_ubar } = rhs(s, f, t);
    let psi = d_omega_osc.map_modes(|k1, k2, c| if k2 == 0 { c * 0.0 } else { c / -laplacian_symbol(k1, k2) });
    Increment { psi, ubar: d_ubar }
}

/// `exp(-(2 pi k1)^2 tau)` applied column-wise.
fn diffuse(s: &ScalarSpectrum, tau: f64) -> ScalarSpectrum {
    s.map_modes(|k1, _, c| {
        let kx = 2.0 * PI * k1 as f64;
        c * (-kx * kx * tau).exp()
    })
}

/// Linear combination helper: `base + sum a_i * inc_i` on both variables.
fn combine(psi: ScalarSpectrum, ubar: &Profile, terms: &[(f64, &ScalarSpectrum, &Profile)], time: f64) -> FlowState {
    let mut psi = psi;
    let mut ubar = ubar.clone();
    for (a, p, b) in terms {
        psi.axpy(*a, p);
        ubar.axpy(*a, b);
    }
    FlowState::from_parts(psi, ubar, time)
}

/// One Lawson (integrating-factor) RK3 step with Kutta's coefficients
/// `c = (0, 1/2, 1)`, `a21 = 1/2`, `a31 = -1`, `a32 = 2`, `b = (1/6, 2/3, 1/6)`.
/// Forcing is evaluated at the stage times.
pub fn step(s: &FlowState, f: &ForcingSpec, h: f64) -> FlowState {
    let t = s.time();
    let psi0 = s.psi();
    let ub0 = s.ubar();

    let k1 = increment(s, f, t);

    let y2 = combine(diffuse(psi0, 0.5 * h), ub0, &[(0.5 * h, &diffuse(&k1.psi, 0.5 * h), &k1.ubar)], t + 0.5 * h);
    let k2 = increment(&y2, f, t + 0.5 * h);
    let k2_half = diffuse(&k2.psi, 0.5 * h);

    let y3 =
        combine(diffuse(psi0, h), ub0, &[(-h, &diffuse(&k1.psi, h), &k1.ubar), (2.0 * h, &k2_half, &k2.ubar)], t + h);
    let k3 = increment(&y3, f, t + h);

    combine(
        diffuse(psi0, h),
        ub0,
        &[(h / 6.0, &diffuse(&k1.psi, h), &k1.ubar), (2.0 * h / 3.0, &k2_half, &k2.ubar), (h / 6.0, &k3.psi, &k3.ubar)],
        t + h,
    )
}

/// `(max |u|, max |v|)` over the collocation grid.
pub fn max_speeds(s: &FlowState) -> (f64, f64) {
    let vel = velocity(s);
    (to_physical(&vel.u).max_abs(), to_physical(&vel.v).max_abs())
}

/// `dt max(max|u| / dx, max|v| / dy)`.
pub fn courant_number(s: &FlowState, dt: f64) -> f64 {
    let (mu, mv) = max_speeds(s);
    let g = s.grid();
    dt * (mu / g.dx_spacing()).max(mv / g.dy_spacing())
}

/// `cfl min(dx / max|u|, dy / max|v|)`, capped at `dt_max`.
pub fn cfl_dt(s: &FlowState, cfg: &StepperConfig) -> f64 {
    let (mu, mv) = max_speeds(s);
    let g = s.grid();
    let rate = (mu / g.dx_spacing()).max(mv / g.dy_spacing());
    if rate == 0.0 {
        cfg.dt_max
    } else {
        (cfg.cfl / rate).min(cfg.dt_max)
    }
}

pub type ObserverError = Box<dyn std::error::Error + Send + Sync>;

/// Receives records and snapshots as the integration proceeds.
pub trait Observer {
    fn on_record(&mut self, _record: &DiagnosticsRecord) -> Result<(), ObserverError> {
        Ok(())
    }

    fn on_snapshot(&mut self, _state: &FlowState, _step: usize) -> Result<(), ObserverError> {
        Ok(())
    }
}

/// Observer that discards everything.
pub struct NoObserver;

impl Observer for NoObserver {}

#[derive(Debug, Error)]
pub enum StepError {
    #[error("invalid stepper configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("observer failed: {0}")]
    Observer(ObserverError),
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Post-step Courant number exceeded twice the configured CFL constant.
    CflViolation {
        t: f64,
        courant: f64,
        limit: f64,
    },
    /// A coefficient became NaN or infinite; the state before that step is kept.
    NonFinite {
        t: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub final_state: FlowState,
    pub records: Vec<DiagnosticsRecord>,
    pub status: RunStatus,
    pub steps: usize,
}

/// Steps `s0` to `cfg.t_end`, recording diagnostics at step 0, every
/// `diagnostics_every` steps and at the final step.
pub fn integrate(
    s0: &FlowState,
    f: &ForcingSpec,
    cfg: &StepperConfig,
    monitors: &mut MonitorSet,
    observer: &mut dyn Observer,
) -> Result<Trajectory, StepError> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(StepError::Config(errs));
    }
    let t0 = s0.time();
    let span = cfg.t_end - t0;
    let mut state = s0.clone();
    if span <= 0.0 {
        return Ok(Trajectory { final_state: state, records: Vec::new(), status: RunStatus::Completed, steps: 0 });
    }
    let fixed = match cfg.dt {
        TimeStep::Fixed(dt) => {
            let n = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
            Some((n, span / n as f64))
        }
        TimeStep::Auto => None,
    };

    let emit = |monitors: &mut MonitorSet, state: &FlowState, observer: &mut dyn Observer| {
        let rec = monitors.observe(state);
        observer.on_record(&rec).map_err(StepError::Observer)
    };
    emit(monitors, &state, observer)?;
    if cfg.snapshot_every.is_some() {
        observer.on_snapshot(&state, 0).map_err(StepError::Observer)?;
    }

    let limit = 2.0 * cfg.cfl;
    let mut steps = 0usize;
    let mut status = RunStatus::Completed;
    loop {
        let (h, last) = match fixed {
            Some((n, h)) => (h, steps + 1 == n),
            None => {
                let remaining = cfg.t_end - state.time();
                let h = cfl_dt(&state, cfg);
                if h >= remaining * (1.0 - 1e-12) {
                    (remaining, true)
                } else {
                    (h, false)
                }
            }
        };
        let mut next = step(&state, f, h);
        if last {
            next = next.with_time(cfg.t_end);
        } else if fixed.is_some() {
            next = next.with_time(t0 + (steps + 1) as f64 * h);
        }
        steps += 1;
        if !next.is_finite() {
            status = RunStatus::NonFinite { t: next.time() };
            break;
        }
        monitors.advance(&state, &next, h);
        let courant = courant_number(&next, h);
        state = next;
        let violated = courant > limit;
        if last || violated || steps.is_multiple_of(cfg.diagnostics_every) {
            emit(monitors, &state, observer)?;
        }
        if let Some(every) = cfg.snapshot_every {
            if last || violated || steps.is_multiple_of(every) {
                observer.on_snapshot(&state, steps).map_err(StepError::Observer)?;
            }
        }
        if violated {
            status = RunStatus::CflViolation { t: state.time(), courant, limit };
            break;
        }
        if last {
            break;
        }
    }
    Ok(Trajectory { final_state: state, records: monitors.records().to_vec(), status, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::l2_norm;
    use num_complex::Complex64;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(16, 16).unwrap()
    }

    #[test]
    fn pure_shear_is_a_fixed_point() {
        let s = FlowState::pure_shear(grid(), 1.0);
        let f = ForcingSpec::none(*s.grid());
        let t = rhs(&s, &f, 0.0);
        assert_eq!(l2_norm(&t.d_omega_osc), 0.0);
        assert!(t.d_ubar.coeffs().iter().all(|c| *c == 0.0));
        let next = step(&s, &f, 0.01);
        assert_eq!(next.psi(), s.psi());
        assert_eq!(next.ubar(), s.ubar());
        assert_eq!(next.time(), 0.01);
    }

    #[test]
    fn cfl_dt_examples() {
        let g = SpectralGrid::new(64, 64).unwrap();
        let cfg = StepperConfig::default();
        assert_eq!(cfl_dt(&FlowState::rest(g), &cfg), cfg.dt_max);
        let s = FlowState::pure_shear(g, 1.0);
        let (mu, _) = max_speeds(&s);
        let dt = cfl_dt(&s, &cfg);
        assert!((dt * mu - 0.5 / 64.0).abs() < 1e-15);
        // the projected shear peaks just below 1 at the wall
        assert!((dt - 1.0 / 128.0).abs() < 5e-3 / 128.0);
        let dt2 = cfl_dt(&s.scaled(2.0), &cfg);
        assert!((dt2 - dt / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let g = grid();
        let mut psi = ScalarSpectrum::zeros(g, YBasis::SineY);
        psi.set_mode(1, 1, Complex64::new(0.0, -0.5));
        let s = FlowState::new(psi, Profile::zeros(16, YBasis::CosineY), 0.3).unwrap();
        let f = ForcingSpec::none(g);
        let cfg = StepperConfig { t_end: 0.3, ..StepperConfig::default() };
        let mut mon = MonitorSet::new(&s, &f, Default::default());
        let traj = integrate(&s, &f, &cfg, &mut mon, &mut NoObserver).unwrap();
        assert_eq!(traj.final_state, s);
        assert!(traj.records.is_empty());
        assert_eq!(traj.steps, 0);
    }

    #[test]
    fn config_validation_lists_every_problem() {
        let cfg = StepperConfig { dt: TimeStep::Fixed(-1.0), cfl: 0.0, diagnostics_every: 0, ..Default::default() };
        assert_eq!(cfg.validate().len(), 3);
    }
}
