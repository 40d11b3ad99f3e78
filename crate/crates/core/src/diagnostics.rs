//! Monitors evaluated along a trajectory: energy and enstrophy budgets, the a
//! priori bounds, exponential-decay fitting, mean-profile convergence and
//! twin-run divergence.

use std::f64::consts::PI;

use thiserror::Error;

use crate::flow::{
    sobolev_norms, velocity, velocity_distance, FlowState, ForcingNorms, ForcingSpec, SobolevNorms, VelocityPair,
};
use crate::spectral::{dx, dy, laplacian_symbol, multiply_dealiased, Profile, SpectralError, YBasis};
use crate::stepper::{rhs, step};

/// Time integrals of forcing norms from the first record to `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForcingIntegrals {
    /// `int ||f||`
    pub f_l2: f64,
    /// `int ||curl f||`
    pub curl_l2: f64,
    /// `int ||curl f||^2`
    pub curl_sq: f64,
    /// `int ||dyy f1||^2`
    pub dyy_f1_sq: f64,
    /// `int ||dy f1||^2`
    pub dy_f1_sq: f64,
}

/// One time sample of every monitored quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    /// `||omega||^2`
    pub enstrophy: f64,
    pub norms: SobolevNorms,
    /// Zero at the first record.
    pub energy_residual: f64,
    /// Zero at the first record.
    pub enstrophy_residual: f64,
    pub e1_margin: f64,
    pub e2_margin: f64,
    pub v2_margin: f64,
    pub v20_margin: f64,
    pub osc_vorticity_l2: f64,
    pub mean_profile_l2: f64,
    pub mean_momentum: f64,
    /// `(f, u)`
    pub work: f64,
    /// `(curl f, omega)`
    pub curl_work: f64,
    /// Running time integrals since the first record.
    pub integrals: StepIntegrals,
    pub forcing: ForcingIntegrals,
    pub twin_distance: Option<f64>,
}

impl DiagnosticsRecord {
    /// `||u_x||^2 + ||v_x||^2`.
    pub fn dissipation(&self) -> f64 {
        self.norms.ux_l2.powi(2) + self.norms.vx_l2.powi(2)
    }

    pub fn margins(&self) -> [f64; 4] {
        [self.e1_margin, self.e2_margin, self.v2_margin, self.v20_margin]
    }
}

/// Time integrals accumulated step by step along a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepIntegrals {
    /// `int (||u_x||^2 + ||v_x||^2)`
    pub dissipation: f64,
    /// `int ||omega_x||^2`
    pub enstrophy_dissipation: f64,
    /// `int (||u_x||^2 + ||u_xy||^2)`
    pub shear_dissipation: f64,
    /// `int (f, u)`
    pub work: f64,
    /// `int (curl f, omega)`
    pub curl_work: f64,
}

/// Logarithmic mean, the exact time average of an exponential through `a`
/// and `b`; the arithmetic mean when an endpoint vanishes.
fn log_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        0.5 * (a + b)
    } else if a == b {
        a
    } else {
        (b - a) / ((b - a) / a).ln_1p()
    }
}

/// Step integrals of the three dissipation rates, mode by mode: each
/// `|psi_k|^2` is averaged with the logarithmic mean, which is exact under
/// the diffusion factor and keeps stiff modes from being overcounted.
fn dissipation_step(prev: &FlowState, next: &FlowState, h: f64) -> [f64; 3] {
    let g = prev.grid();
    let nx = g.nx();
    let (a, b) = (prev.psi().coeffs(), next.psi().coeffs());
    let mut out = [0.0; 3];
    for k2 in 1..g.ny() {
        let w = YBasis::SineY.weight(k2);
        let ky2 = (PI * k2 as f64).powi(2);
        for idx in 1..nx {
            let kx2 = (2.0 * PI * g.k1_at(idx) as f64).powi(2);
            let m = log_mean(a[k2 * nx + idx].norm_sqr(), b[k2 * nx + idx].norm_sqr()) * w * h * kx2;
            let lam = kx2 + ky2;
            out[0] += m * lam;
            out[1] += m * lam * lam;
            out[2] += m * ky2 * (1.0 + ky2);
        }
    }
    out
}

/// Energy budget residual `dE/dt + D - (f, u)` between two records. The
/// dissipation and work enter through their step-accumulated integrals.
pub fn energy_budget(prev: &DiagnosticsRecord, next: &DiagnosticsRecord) -> f64 {
    let dt = next.t - prev.t;
    let (a, b) = (&prev.integrals, &next.integrals);
    (next.energy - prev.energy + (b.dissipation - a.dissipation) - (b.work - a.work)) / dt
}

/// Enstrophy budget residual `d||omega||^2/dt + 2||omega_x||^2 - 2(curl f, omega)`.
pub fn enstrophy_budget(prev: &DiagnosticsRecord, next: &DiagnosticsRecord) -> f64 {
    let dt = next.t - prev.t;
    let (a, b) = (&prev.integrals, &next.integrals);
    (next.enstrophy - prev.enstrophy + 2.0 * (b.enstrophy_dissipation - a.enstrophy_dissipation)
        - 2.0 * (b.curl_work - a.curl_work))
        / dt
}

/// Margins `[e1, e2, v2, v20]` of `r` relative to the initial record, and the
/// corresponding right-hand sides.
fn margins_since(first: &DiagnosticsRecord, r: &DiagnosticsRecord) -> ([f64; 4], [f64; 4]) {
    let u0 = (2.0 * first.energy).sqrt();
    let w0 = first.norms.omega_l2;
    let int_f = r.forcing.f_l2 - first.forcing.f_l2;
    let int_c = r.forcing.curl_l2 - first.forcing.curl_l2;
    let diss = r.integrals.dissipation - first.integrals.dissipation;
    let zdiss = r.integrals.enstrophy_dissipation - first.integrals.enstrophy_dissipation;
    let rhs = [u0 + int_f, u0 * u0 + 2.0 * int_f * int_f, w0 + int_c, w0 * w0 + 2.0 * int_c * int_c];
    let lhs = [(2.0 * r.energy).sqrt(), diss, r.norms.omega_l2, zdiss];
    ([rhs[0] - lhs[0], rhs[1] - lhs[1], rhs[2] - lhs[2], rhs[3] - lhs[3]], rhs)
}

/// Outcome of one bound monitor over a history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    /// Smallest `margin / rhs`.
    pub min_relative_margin: f64,
    pub min_margin: f64,
    pub t_worst: f64,
    pub passed: bool,
}

/// Which a priori bound to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// `||u(t)|| <= ||u0|| + int ||f||`
    Velocity,
    /// `int (||u_x||^2 + ||v_x||^2) <= ||u0||^2 + 2 (int ||f||)^2`
    Dissipation,
    /// `||omega(t)|| <= ||omega0|| + int ||curl f||`
    Vorticity,
    /// `int ||omega_x||^2 <= ||omega0||^2 + 2 (int ||curl f||)^2`
    VorticityDissipation,
}

impl Bound {
    pub const ALL: [Bound; 4] = [Bound::Velocity, Bound::Dissipation, Bound::Vorticity, Bound::VorticityDissipation];

    pub fn id(self) -> &'static str {
        match self {
            Bound::Velocity => "e1",
            Bound::Dissipation => "e2",
            Bound::Vorticity => "v2",
            Bound::VorticityDissipation => "v20",
        }
    }
}

/// Evaluates a bound over a record history. Fails when some margin is below
/// `-tolerance * rhs`.
pub fn check_bound(history: &[DiagnosticsRecord], bound: Bound, tolerance: f64) -> BoundCheck {
    let mut out =
        BoundCheck { min_relative_margin: f64::INFINITY, min_margin: f64::INFINITY, t_worst: 0.0, passed: true };
    let Some(first) = history.first() else {
        return out;
    };
    let i = bound as usize;
    for r in history {
        let (margins, rhs) = margins_since(first, r);
        let (m, rhs) = (margins[i], rhs[i]);
        out.min_margin = out.min_margin.min(m);
        let rel = if rhs > 0.0 {
            m / rhs
        } else if m < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        };
        if rel < out.min_relative_margin {
            out.min_relative_margin = rel;
            out.t_worst = r.t;
        }
        if m < -tolerance * rhs {
            out.passed = false;
        }
    }
    out
}

pub fn check_velocity_bound(history: &[DiagnosticsRecord], tolerance: f64) -> BoundCheck {
    check_bound(history, Bound::Velocity, tolerance)
}

pub fn check_dissipation_bound(history: &[DiagnosticsRecord], tolerance: f64) -> BoundCheck {
    check_bound(history, Bound::Dissipation, tolerance)
}

/// The `||omega||` bound and its cumulative counterpart.
pub fn check_vorticity_bounds(history: &[DiagnosticsRecord], tolerance: f64) -> (BoundCheck, BoundCheck) {
    (check_bound(history, Bound::Vorticity, tolerance), check_bound(history, Bound::VorticityDissipation, tolerance))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("decay series has {usable} usable points, at least 10 are needed")]
    DegenerateSeries { usable: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Decay rate of the squared norm.
    pub rate: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares line through `(t, ln value^2)`. Samples below `1e-13` are
/// dropped, then the first 10% of the remaining ones.
pub fn fit_exponential_decay(series: &[(f64, f64)]) -> Result<DecayFit, DiagnosticsError> {
    let above: Vec<(f64, f64)> =
        series.iter().copied().filter(|(_, v)| *v >= 1e-13 && v.is_finite()).map(|(t, v)| (t, (v * v).ln())).collect();
    let skip = above.len() / 10;
    let pts = &above[skip..];
    if pts.len() < 10 {
        return Err(DiagnosticsError::DegenerateSeries { usable: pts.len() });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mt)).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit { rate: -slope, r_squared, points: pts.len() })
}

/// Convergence to a steady shear along an unforced run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticsReport {
    /// `||u~|| + ||v||` at the last record.
    pub final_oscillation: f64,
    pub converged: bool,
    /// Largest `||ubar(t) - ubar(s)|| / (C int_s^t (||u_xy||^2 + ||u_x||^2))`
    /// over record pairs in the final third (0 when every difference vanishes).
    pub worst_cauchy_ratio: f64,
    pub cauchy_ok: bool,
    pub momentum_drift: f64,
}

/// Checks decay of the oscillation below `threshold` and the Cauchy property
/// of the mean profile with constant `c`. `profiles` pairs record times with
/// the mean profile at that time.
pub fn check_asymptotics(
    history: &[DiagnosticsRecord],
    profiles: &[(f64, Profile)],
    threshold: f64,
    c: f64,
) -> AsymptoticsReport {
    let (Some(first), Some(last)) = (history.first(), history.last()) else {
        return AsymptoticsReport {
            final_oscillation: 0.0,
            converged: true,
            worst_cauchy_ratio: 0.0,
            cauchy_ok: true,
            momentum_drift: 0.0,
        };
    };
    let final_oscillation = last.norms.osc_u_l2 + last.norms.v_l2;

    // records are strictly increasing in t, so a binary search pairs each
    // profile with its running integral
    let integral_at = |t: f64| {
        let i = history.partition_point(|r| r.t < t);
        history.get(i).filter(|r| r.t == t).map(|r| r.integrals.shear_dissipation)
    };
    let t_start = first.t + (2.0 / 3.0) * (last.t - first.t);
    let tail: Vec<(Option<f64>, &Profile)> =
        profiles.iter().filter(|(t, _)| *t >= t_start).map(|(t, p)| (integral_at(*t), p)).collect();

    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (i, (is, ps)) in tail.iter().enumerate() {
        for (it, pt) in &tail[i + 1..] {
            let diff = pt.sub(ps).l2_norm();
            if diff == 0.0 {
                continue;
            }
            let rhs = match (is, it) {
                (Some(a), Some(b)) => c * (b - a),
                _ => 0.0,
            };
            // a few ulps of the profile itself
            let floor = 16.0 * f64::EPSILON * pt.l2_norm();
            if diff > rhs + floor {
                ok = false;
            }
            if rhs > 0.0 {
                worst = worst.max(diff / rhs);
            } else if diff > floor {
                worst = f64::INFINITY;
            }
        }
    }
    AsymptoticsReport {
        final_oscillation,
        converged: final_oscillation <= threshold,
        worst_cauchy_ratio: worst,
        cauchy_ok: ok,
        momentum_drift: (last.mean_momentum - first.mean_momentum).abs(),
    }
}

/// L2 distance between the velocity fields of two runs.
pub fn twin_run_distance(a: &FlowState, b: &FlowState) -> Result<f64, SpectralError> {
    velocity_distance(a, b)
}

/// Terms of the weak form tested against `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidual {
    /// `|d/dt (u, w) + (u_x, w_x) + int (u . grad u) . w - (f, w)|`
    pub residual: f64,
    /// Sum of the magnitudes of the four terms.
    pub scale: f64,
}

/// Evaluates the weak form against a divergence-free test field. The time
/// derivative comes from `rhs` plus horizontal diffusion; the nonlinear term is
/// computed independently in velocity form.
pub fn weak_residual(s: &FlowState, f: &ForcingSpec, w: &VelocityPair) -> Result<WeakResidual, SpectralError> {
    let t = s.time();
    let tend = rhs(s, f, t);
    let psi_t = tend.d_omega_osc.map_modes(|k1, k2, c| if k2 == 0 { c * 0.0 } else { c / -laplacian_symbol(k1, k2) });
    let psi_t = psi_t.add(&dx(&dx(s.psi())));
    let u_t = velocity(&FlowState::new(psi_t, tend.d_ubar, t)?);

    let g = *s.grid();
    let resolved = FlowState::new(s.psi().dealiased(), s.ubar().truncated(g.ky_cut()), t)?;
    let VelocityPair { u, v } = velocity(&resolved);
    let mut n1 = multiply_dealiased(&u, &dx(&u))?;
    n1.axpy(1.0, &multiply_dealiased(&v, &dy(&u))?);
    let mut n2 = multiply_dealiased(&u, &dx(&v))?;
    n2.axpy(1.0, &multiply_dealiased(&v, &dy(&v))?);

    let vel = velocity(s);
    let terms = [
        u_t.inner(w),
        dx(&vel.u).inner(&dx(&w.u)) + dx(&vel.v).inner(&dx(&w.v)),
        n1.inner(&w.u) + n2.inner(&w.v),
        -f.at(t).inner(w),
    ];
    Ok(WeakResidual { residual: terms.iter().sum::<f64>().abs(), scale: terms.iter().map(|x| x.abs()).sum() })
}

/// Monitor settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorConfig {
    /// Relative slack for the bound margins.
    pub bound_tolerance: f64,
    /// Size of the perturbation for the twin run; `None` disables it.
    pub twin_perturbation: Option<f64>,
    pub twin_seed: u64,
    /// Keep the mean profile of every record (for `check_asymptotics`).
    pub keep_profiles: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig { bound_tolerance: 1e-8, twin_perturbation: None, twin_seed: 0, keep_profiles: false }
    }
}

/// Streaming monitor owned by one integration.
#[derive(Debug, Clone)]
pub struct MonitorSet {
    config: MonitorConfig,
    forcing: ForcingSpec,
    forcing_norms: ForcingNorms,
    t0: f64,
    integrals: StepIntegrals,
    /// `(t, (f, u), (curl f, omega))` at the end of the last step.
    last_work: Option<(f64, f64, f64)>,
    twin: Option<FlowState>,
    profiles: Vec<(f64, Profile)>,
    records: Vec<DiagnosticsRecord>,
}

impl MonitorSet {
    pub fn new(s0: &FlowState, forcing: &ForcingSpec, config: MonitorConfig) -> Self {
        let twin = config.twin_perturbation.map(|delta| {
            let g = *s0.grid();
            let kmax = g.max_band().min(4);
            let pert = FlowState::random(g, config.twin_seed, kmax, delta).expect("band within grid");
            FlowState::from_parts(s0.psi().add(pert.psi()), add_profiles(s0.ubar(), pert.ubar()), s0.time())
        });
        MonitorSet {
            config,
            forcing: forcing.clone(),
            forcing_norms: forcing.norms(),
            t0: s0.time(),
            integrals: StepIntegrals::default(),
            last_work: None,
            twin,
            profiles: Vec::new(),
            records: Vec::new(),
        }
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn profiles(&self) -> &[(f64, Profile)] {
        &self.profiles
    }

    pub fn twin(&self) -> Option<&FlowState> {
        self.twin.as_ref()
    }

    fn works(&self, s: &FlowState) -> (f64, f64, f64) {
        if self.forcing.is_zero() {
            return (s.time(), 0.0, 0.0);
        }
        (s.time(), self.forcing.work(s, s.time()), self.forcing.curl_work(s, s.time()))
    }

    /// Accounts for one step `prev -> next` of length `h`: accumulates the
    /// running integrals and advances the twin run.
    pub fn advance(&mut self, prev: &FlowState, next: &FlowState, h: f64) {
        let [d, z, sh] = dissipation_step(prev, next, h);
        self.integrals.dissipation += d;
        self.integrals.enstrophy_dissipation += z;
        self.integrals.shear_dissipation += sh;
        let w0 = match self.last_work {
            Some(w) if w.0 == prev.time() => w,
            _ => self.works(prev),
        };
        let w1 = self.works(next);
        self.integrals.work += 0.5 * h * (w0.1 + w1.1);
        self.integrals.curl_work += 0.5 * h * (w0.2 + w1.2);
        self.last_work = Some(w1);
        if let Some(tw) = &self.twin {
            self.twin = Some(step(tw, &self.forcing, h));
        }
    }

    fn forcing_integrals(&self, t: f64) -> ForcingIntegrals {
        let env = self.forcing.envelope();
        let i1 = env.integral(t) - env.integral(self.t0);
        let i2 = env.integral_sq(t) - env.integral_sq(self.t0);
        let n = &self.forcing_norms;
        ForcingIntegrals {
            f_l2: n.f_l2 * i1,
            curl_l2: n.curl_l2 * i1,
            curl_sq: n.curl_l2.powi(2) * i2,
            dyy_f1_sq: n.dyy_f1_l2.powi(2) * i2,
            dy_f1_sq: n.dy_f1_l2.powi(2) * i2,
        }
    }

    /// Computes, stores and returns the record for `s`.
    pub fn observe(&mut self, s: &FlowState) -> DiagnosticsRecord {
        let t = s.time();
        let norms = sobolev_norms(s);
        let (_, work, curl_work) = self.works(s);
        let mut rec = DiagnosticsRecord {
            t,
            energy: s.energy(),
            enstrophy: norms.omega_l2.powi(2),
            norms,
            energy_residual: 0.0,
            enstrophy_residual: 0.0,
            e1_margin: 0.0,
            e2_margin: 0.0,
            v2_margin: 0.0,
            v20_margin: 0.0,
            osc_vorticity_l2: s.osc_vorticity_l2(),
            mean_profile_l2: s.ubar().l2_norm(),
            mean_momentum: s.mean_momentum(),
            work,
            curl_work,
            integrals: self.integrals,
            forcing: self.forcing_integrals(t),
            twin_distance: self.twin.as_ref().map(|tw| velocity_distance(s, tw).expect("twin shares the grid")),
        };
        if let Some(prev) = self.records.last() {
            rec.energy_residual = energy_budget(prev, &rec);
            rec.enstrophy_residual = enstrophy_budget(prev, &rec);
        }
        let first = self.records.first().unwrap_or(&rec);
        let (m, _) = margins_since(first, &rec);
        [rec.e1_margin, rec.e2_margin, rec.v2_margin, rec.v20_margin] = m;
        if self.config.keep_profiles {
            self.profiles.push((t, s.ubar().clone()));
        }
        self.records.push(rec.clone());
        rec
    }

    /// The four bound checks over everything observed so far.
    pub fn bound_checks(&self) -> [BoundCheck; 4] {
        Bound::ALL.map(|b| check_bound(&self.records, b, self.config.bound_tolerance))
    }
}

fn add_profiles(a: &Profile, b: &Profile) -> Profile {
    let mut out = a.clone();
    out.axpy(1.0, b);
    out
}
