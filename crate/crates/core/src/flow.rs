//! Divergence-free flow states: oscillation streamfunction plus mean shear profile.

use crate::spectral::{
    dx, dy, l2_norm, laplacian_symbol, random_band_limited, random_profile, Profile, ScalarSpectrum, SpectralError,
    SpectralGrid, YBasis,
};

/// Velocity components: `u` in the cosine family (mean included), `v` in the sine family.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityPair {
    pub u: ScalarSpectrum,
    pub v: ScalarSpectrum,
}

impl VelocityPair {
    pub fn new(u: ScalarSpectrum, v: ScalarSpectrum) -> Result<Self, SpectralError> {
        expect_basis(&u, YBasis::CosineY)?;
        expect_basis(&v, YBasis::SineY)?;
        if u.grid() != v.grid() {
            return Err(SpectralError::GridMismatch { left: *u.grid(), right: *v.grid() });
        }
        Ok(VelocityPair { u, v })
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.u.grid()
    }

    /// `(self, other)` in L2 over the channel, both components.
    pub fn inner(&self, other: &VelocityPair) -> f64 {
        self.u.inner(&other.u) + self.v.inner(&other.v)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// `dx(u) + dy(v)`, a cosine-family spectrum.
    pub fn divergence(&self) -> ScalarSpectrum {
        dx(&self.u).add(&dy(&self.v))
    }

    pub fn scale(&self, a: f64) -> Self {
        VelocityPair { u: self.u.scale(a), v: self.v.scale(a) }
    }
}

fn expect_basis(s: &ScalarSpectrum, expected: YBasis) -> Result<(), SpectralError> {
    if s.basis() == expected {
        Ok(())
    } else {
        Err(SpectralError::BasisMismatch { expected, found: s.basis() })
    }
}

/// Prognostic state. `psi` is a sine-family streamfunction without k1 = 0
/// content; `ubar` is the cosine-family mean profile of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    psi: ScalarSpectrum,
    ubar: Profile,
    time: f64,
}

impl FlowState {
    /// Builds a state, discarding any k1 = 0 content of `psi`.
    pub fn new(psi: ScalarSpectrum, ubar: Profile, time: f64) -> Result<Self, SpectralError> {
        expect_basis(&psi, YBasis::SineY)?;
        if ubar.basis() != YBasis::CosineY {
            return Err(SpectralError::BasisMismatch { expected: YBasis::CosineY, found: ubar.basis() });
        }
        if ubar.ny() != psi.grid().ny() {
            return Err(SpectralError::InvalidGrid(format!(
                "mean profile has ny = {}, streamfunction grid has ny = {}",
                ubar.ny(),
                psi.grid().ny()
            )));
        }
        Ok(FlowState { psi: psi.without_mean(), ubar, time })
    }

    pub fn rest(grid: SpectralGrid) -> Self {
        FlowState {
            psi: ScalarSpectrum::zeros(grid, YBasis::SineY),
            ubar: Profile::zeros(grid.ny(), YBasis::CosineY),
            time: 0.0,
        }
    }

    /// Steady shear `(a y, 0)` in its cosine projection.
    pub fn pure_shear(grid: SpectralGrid, a: f64) -> Self {
        FlowState { ubar: Profile::linear_shear(grid.ny(), a), ..FlowState::rest(grid) }
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.psi.grid()
    }

    pub fn psi(&self) -> &ScalarSpectrum {
        &self.psi
    }

    pub fn ubar(&self) -> &Profile {
        &self.ubar
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite() && self.ubar.is_finite() && self.time.is_finite()
    }

    /// `int_Omega u = int_0^1 ubar dy`.
    pub fn mean_momentum(&self) -> f64 {
        self.ubar.integral()
    }

    /// `E = (||u||^2 + ||v||^2) / 2`.
    pub fn energy(&self) -> f64 {
        0.5 * (self.ubar.inner(&self.ubar) + grad_sq(&self.psi))
    }

    /// Squared enstrophy `||omega||^2`.
    pub fn enstrophy(&self) -> f64 {
        let (osc, bar) = vorticity(self);
        osc.inner(&osc) + bar.inner(&bar)
    }

    /// `||omega~||`, the oscillation vorticity norm.
    pub fn osc_vorticity_l2(&self) -> f64 {
        l2_norm(&self.psi.laplacian())
    }

    /// Same state with every mode outside `|k1| <= m`, `k2 <= m` removed.
    pub fn truncated(&self, m: usize) -> Self {
        FlowState { psi: crate::spectral::truncate_modes(&self.psi, m), ubar: self.ubar.truncated(m), time: self.time }
    }

    /// Embeds (or truncates) the state onto another grid.
    pub fn resample(&self, grid: SpectralGrid) -> Self {
        let mut coeffs = vec![0.0; grid.ny() + 1];
        let n = coeffs.len().min(self.ubar.coeffs().len());
        coeffs[..n].copy_from_slice(&self.ubar.coeffs()[..n]);
        FlowState { psi: self.psi.resample(grid), ubar: Profile::from_coeffs(YBasis::CosineY, coeffs), time: self.time }
    }

    /// Seeded random state on `|k1|, k2 <= kmax` with `||u||_2 = amplitude`.
    /// The oscillation and the mean profile are drawn independently.
    pub fn random(grid: SpectralGrid, seed: u64, kmax: usize, amplitude: f64) -> Result<Self, SpectralError> {
        let psi = random_band_limited(grid, seed, kmax, YBasis::SineY)?.without_mean();
        let ubar = random_profile(grid.ny(), seed ^ 0x9e37_79b9_7f4a_7c15, kmax, YBasis::CosineY);
        let s = FlowState { psi, ubar, time: 0.0 };
        let norm = (2.0 * s.energy()).sqrt();
        Ok(if norm > 0.0 { s.scaled(amplitude / norm) } else { s })
    }

    /// Velocity multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        FlowState { psi: self.psi.scale(a), ubar: self.ubar.scale(a), time: self.time }
    }

    pub(crate) fn from_parts(psi: ScalarSpectrum, ubar: Profile, time: f64) -> Self {
        FlowState { psi, ubar, time }
    }
}

/// `||grad psi||^2 = sum w |lambda| |psi|^2`.
fn grad_sq(psi: &ScalarSpectrum) -> f64 {
    let lap = psi.laplacian();
    -psi.inner(&lap)
}

/// `u = ubar - dy(psi)`, `v = dx(psi)`.
pub fn velocity(s: &FlowState) -> VelocityPair {
    let u = s.ubar.to_spectrum(*s.grid()).sub(&dy(&s.psi));
    let v = dx(&s.psi);
    VelocityPair { u, v }
}

/// Oscillation vorticity `lap psi` and mean vorticity `-dy(ubar)`. Both are
/// sine-family: the mean part is the derivative of a cosine profile.
pub fn vorticity(s: &FlowState) -> (ScalarSpectrum, Profile) {
    (s.psi.laplacian(), s.ubar.dy().scale(-1.0))
}

/// Full vorticity as one sine-family spectrum (mean in the k1 = 0 row).
pub fn vorticity_field(s: &FlowState) -> ScalarSpectrum {
    let (osc, bar) = vorticity(s);
    osc.add(&bar.to_spectrum(*s.grid()))
}

/// Rebuilds a state from a velocity pair. The mean of `u` becomes `ubar`;
/// `psi` solves `lap psi = v~_x - u~_y` with Dirichlet walls, which is the
/// streamfunction least-squares projection for non-solenoidal input.
pub fn from_velocity(u: &ScalarSpectrum, v: &ScalarSpectrum) -> Result<FlowState, SpectralError> {
    expect_basis(u, YBasis::CosineY)?;
    expect_basis(v, YBasis::SineY)?;
    if u.grid() != v.grid() {
        return Err(SpectralError::GridMismatch { left: *u.grid(), right: *v.grid() });
    }
    let ubar = u.mean_profile();
    let curl = dx(&v.without_mean()).sub(&dy(&u.without_mean()));
    let psi = curl.map_modes(|k1, k2, c| {
        let lam = laplacian_symbol(k1, k2);
        if lam == 0.0 {
            c * 0.0
        } else {
            c / -lam
        }
    });
    Ok(FlowState { psi: psi.without_mean(), ubar, time: 0.0 })
}

/// L2 distance between the velocity fields of two states.
pub fn velocity_distance(a: &FlowState, b: &FlowState) -> Result<f64, SpectralError> {
    if a.grid() != b.grid() {
        return Err(SpectralError::GridMismatch { left: *a.grid(), right: *b.grid() });
    }
    let dpsi = a.psi.sub(&b.psi);
    let dbar = a.ubar.sub(&b.ubar);
    Ok((dbar.inner(&dbar) + grad_sq(&dpsi)).max(0.0).sqrt())
}

/// Norms of one state. `ux_l2`, `uy_l2`, `uxy_l2` refer to the `u` component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SobolevNorms {
    pub u_l2: f64,
    pub ux_l2: f64,
    pub uy_l2: f64,
    pub uxy_l2: f64,
    pub v_l2: f64,
    pub vx_l2: f64,
    pub vy_l2: f64,
    pub omega_l2: f64,
    pub omega_x_l2: f64,
    pub grad_omega_l2: f64,
    /// `||grad u||` over both components.
    pub grad_u_l2: f64,
    /// `||grad u_x||` over both components.
    pub grad_ux_l2: f64,
    pub h2_norm: f64,
    /// `||u~||`, the oscillation part of `u`.
    pub osc_u_l2: f64,
}

pub fn sobolev_norms(s: &FlowState) -> SobolevNorms {
    let VelocityPair { u, v } = velocity(s);
    let sq = |f: &ScalarSpectrum| f.inner(f);
    let (ux, uy, vx, vy) = (dx(&u), dy(&u), dx(&v), dy(&v));
    let (uxx, uxy, uyy) = (dx(&ux), dx(&uy), dy(&uy));
    let (vxx, vxy, vyy) = (dx(&vx), dx(&vy), dy(&vy));
    let omega = vorticity_field(s);
    let (wx, wy) = (dx(&omega), dy(&omega));

    let first = sq(&ux) + sq(&uy) + sq(&vx) + sq(&vy);
    let second = sq(&uxx) + sq(&uxy) + sq(&uyy) + sq(&vxx) + sq(&vxy) + sq(&vyy);
    SobolevNorms {
        u_l2: sq(&u).sqrt(),
        ux_l2: sq(&ux).sqrt(),
        uy_l2: sq(&uy).sqrt(),
        uxy_l2: sq(&uxy).sqrt(),
        v_l2: sq(&v).sqrt(),
        vx_l2: sq(&vx).sqrt(),
        vy_l2: sq(&vy).sqrt(),
        omega_l2: sq(&omega).sqrt(),
        omega_x_l2: sq(&wx).sqrt(),
        grad_omega_l2: (sq(&wx) + sq(&wy)).sqrt(),
        grad_u_l2: first.sqrt(),
        grad_ux_l2: (sq(&uxx) + sq(&uxy) + sq(&vxx) + sq(&vxy)).sqrt(),
        h2_norm: (sq(&u) + sq(&v) + first + second).sqrt(),
        osc_u_l2: sq(&u.without_mean()).sqrt(),
    }
}

/// Time dependence of the force, a nonnegative scalar multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    Constant,
    /// `exp(-rate t)`.
    ExponentialDecay {
        rate: f64,
    },
    /// `max(0, 1 - t / t_off)`.
    RampOff {
        t_off: f64,
    },
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 1.0,
            Envelope::ExponentialDecay { rate } => (-rate * t).exp(),
            Envelope::RampOff { t_off } => (1.0 - t / t_off).max(0.0),
        }
    }

    /// `int_0^t env(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => t,
            Envelope::ExponentialDecay { rate } => {
                if rate == 0.0 {
                    t
                } else {
                    -(-rate * t).exp_m1() / rate
                }
            }
            Envelope::RampOff { t_off } => {
                let s = t.min(t_off);
                s - 0.5 * s * s / t_off
            }
        }
    }

    /// `int_0^t env(s)^2 ds`.
    pub fn integral_sq(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => t,
            Envelope::ExponentialDecay { rate } => {
                if rate == 0.0 {
                    t
                } else {
                    -(-2.0 * rate * t).exp_m1() / (2.0 * rate)
                }
            }
            Envelope::RampOff { t_off } => {
                let s = t.min(t_off);
                (t_off / 3.0) * (1.0 - (1.0 - s / t_off).powi(3))
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Envelope::Constant => Ok(()),
            Envelope::ExponentialDecay { rate } if rate.is_finite() && rate >= 0.0 => Ok(()),
            Envelope::ExponentialDecay { rate } => Err(format!("decay rate must be finite and >= 0, got {rate}")),
            Envelope::RampOff { t_off } if t_off.is_finite() && t_off > 0.0 => Ok(()),
            Envelope::RampOff { t_off } => Err(format!("t_off must be finite and > 0, got {t_off}")),
        }
    }
}

/// Force `f1 = fbar1 - dy(psi_f)`, `f2 = dx(psi_f)`, times the envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    psi_f: ScalarSpectrum,
    fbar1: Profile,
    envelope: Envelope,
}

/// Spatial norms of the force at unit envelope.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForcingNorms {
    pub f_l2: f64,
    pub curl_l2: f64,
    pub dy_f1_l2: f64,
    pub dyy_f1_l2: f64,
}

impl ForcingSpec {
    pub fn new(psi_f: ScalarSpectrum, fbar1: Profile, envelope: Envelope) -> Result<Self, SpectralError> {
        let s = FlowState::new(psi_f, fbar1, 0.0)?;
        envelope.validate().map_err(SpectralError::InvalidGrid)?;
        Ok(ForcingSpec { psi_f: s.psi, fbar1: s.ubar, envelope })
    }

    pub fn none(grid: SpectralGrid) -> Self {
        ForcingSpec {
            psi_f: ScalarSpectrum::zeros(grid, YBasis::SineY),
            fbar1: Profile::zeros(grid.ny(), YBasis::CosineY),
            envelope: Envelope::Constant,
        }
    }

    pub fn psi_f(&self) -> &ScalarSpectrum {
        &self.psi_f
    }

    pub fn fbar1(&self) -> &Profile {
        &self.fbar1
    }

    pub fn envelope(&self) -> Envelope {
        self.envelope
    }

    pub fn is_zero(&self) -> bool {
        self.psi_f.coeffs().iter().all(|c| c.norm() == 0.0) && self.fbar1.coeffs().iter().all(|c| *c == 0.0)
    }

    /// Force field at unit envelope.
    pub fn field(&self) -> VelocityPair {
        velocity(&FlowState::from_parts(self.psi_f.clone(), self.fbar1.clone(), 0.0))
    }

    /// Force field at time `t`.
    pub fn at(&self, t: f64) -> VelocityPair {
        self.field().scale(self.envelope.value(t))
    }

    /// `(curl f)~` and `mean(curl f)` at unit envelope.
    pub fn curl(&self) -> (ScalarSpectrum, Profile) {
        vorticity(&FlowState::from_parts(self.psi_f.clone(), self.fbar1.clone(), 0.0))
    }

    pub fn norms(&self) -> ForcingNorms {
        let f = self.field();
        let (co, cb) = self.curl();
        let f1y = dy(&f.u);
        let f1yy = dy(&f1y);
        ForcingNorms {
            f_l2: f.l2_norm(),
            curl_l2: (co.inner(&co) + cb.inner(&cb)).sqrt(),
            dy_f1_l2: l2_norm(&f1y),
            dyy_f1_l2: l2_norm(&f1yy),
        }
    }

    /// `(f(t), u)`.
    pub fn work(&self, s: &FlowState, t: f64) -> f64 {
        let env = self.envelope.value(t);
        if env == 0.0 {
            return 0.0;
        }
        env * self.field().inner(&velocity(s))
    }

    /// `(curl f(t), omega)`.
    pub fn curl_work(&self, s: &FlowState, t: f64) -> f64 {
        let env = self.envelope.value(t);
        if env == 0.0 {
            return 0.0;
        }
        let (co, cb) = self.curl();
        let (wo, wb) = vorticity(s);
        env * (co.inner(&wo) + cb.inner(&wb))
    }
}
