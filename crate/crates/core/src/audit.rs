//! Monte-Carlo and adversarial audits of the functional inequalities used by
//! the energy and vorticity estimates.
//!
//! Every audit draws seeded trial fields, evaluates a scale-invariant ratio
//! and reports its maximum. Trial `i` uses seed `seed + i`; its spectral band
//! is drawn uniformly from `1..=kmax`, so low-mode maximizers are sampled at
//! every `kmax`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::flow::{velocity, FlowState, VelocityPair};
use crate::spectral::{
    dx, dy, l2_norm, multiply_dealiased, random_band_limited, to_physical, PhysicalField, ScalarSpectrum,
    SpectralError, SpectralGrid, YBasis,
};

/// Refinement factor of the quadrature grid for L1 and sup norms.
pub const REFINEMENT: usize = 4;

/// Refinement factor for the triple-product numerator.
pub const TRIPLE_REFINEMENT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InequalityId {
    /// `int |fgh| <= C ||f|| ||g||^(1/2) (||g|| + ||g_x||)^(1/2) ...`
    TripleProduct,
    /// `||f||_inf <= ||f||_1 + ||f_x||_1 + ||f_y||_1 + ||f_xy||_1`
    LinftyL1,
    /// `||v|| <= ||v_y||` for fields vanishing at the walls.
    PoincareWall,
    /// `||g~|| <= C ||g~_x||` for fields with zero horizontal mean.
    PoincareMean,
    /// `int (u . grad w) . w = 0` for divergence-free `u` with `v = 0` at the walls.
    TransportOrthogonality,
}

impl InequalityId {
    pub const ALL: [InequalityId; 5] = [
        InequalityId::TripleProduct,
        InequalityId::LinftyL1,
        InequalityId::PoincareWall,
        InequalityId::PoincareMean,
        InequalityId::TransportOrthogonality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InequalityId::TripleProduct => "triple_product",
            InequalityId::LinftyL1 => "linfty_l1",
            InequalityId::PoincareWall => "poincare_wall",
            InequalityId::PoincareMean => "poincare_mean",
            InequalityId::TransportOrthogonality => "transport_orthogonality",
        }
    }

    /// Ratio above which a trial counts as a violation; `None` when the
    /// constant is unknown and only boundedness is audited.
    pub fn violation_threshold(self) -> Option<f64> {
        match self {
            InequalityId::TripleProduct => None,
            InequalityId::LinftyL1 => Some(1.0 + 1e-3),
            InequalityId::PoincareWall => Some(1.0 + 1e-12),
            InequalityId::PoincareMean => Some(1.0 / (2.0 * PI) + 1e-12),
            InequalityId::TransportOrthogonality => Some(1e-10),
        }
    }

    /// Bases of the trial fields, in the order the ratio expects them.
    fn bases(self) -> &'static [YBasis] {
        use YBasis::*;
        match self {
            InequalityId::TripleProduct => &[CosineY, CosineY, CosineY],
            InequalityId::LinftyL1 => &[CosineY],
            InequalityId::PoincareWall => &[SineY],
            InequalityId::PoincareMean => &[CosineY],
            // mean profile (k1 = 0 row), streamfunction, test field components
            InequalityId::TransportOrthogonality => &[CosineY, SineY, CosineY, SineY],
        }
    }

    /// Whether field `i` may carry `k1` content.
    fn admits(self, field: usize, k1: i64) -> bool {
        match (self, field) {
            (InequalityId::PoincareMean, _) => k1 != 0,
            (InequalityId::TransportOrthogonality, 0) => k1 == 0,
            (InequalityId::TransportOrthogonality, 1) => k1 != 0,
            _ => true,
        }
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InequalityId {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InequalityId::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| AuditError::UnknownInequality(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("unknown inequality `{0}`")]
    UnknownInequality(String),
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("kmax must be at least 1")]
    EmptyBand,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub inequality_id: InequalityId,
    pub n_trials: usize,
    pub kmax: usize,
    pub max_ratio: f64,
    /// Trials whose ratio exceeds the violation threshold.
    pub violations: usize,
    /// Empirical constant: the largest ratio observed.
    pub fitted_constant: f64,
    pub argmax_seed: u64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.max_ratio.is_finite()
    }
}

/// Smallest power-of-two grid whose retained band contains `kmax`.
pub fn audit_grid(kmax: usize) -> Result<SpectralGrid, AuditError> {
    if kmax == 0 {
        return Err(AuditError::EmptyBand);
    }
    let mut nx = 4;
    while SpectralGrid::new(nx, 2)?.kx_cut() < kmax {
        nx *= 2;
    }
    let mut ny = 2;
    while SpectralGrid::new(4, ny)?.ky_cut() < kmax {
        ny *= 2;
    }
    Ok(SpectralGrid::new(nx, ny)?)
}

fn refined_by(s: &ScalarSpectrum, factor: usize) -> PhysicalField {
    let g = s.grid();
    let fine = SpectralGrid::new(factor * g.nx(), factor * g.ny()).expect("refined grid is valid");
    to_physical(&s.resample(fine))
}

fn refined(s: &ScalarSpectrum) -> PhysicalField {
    refined_by(s, REFINEMENT)
}

/// `int |fgh| / [||f|| ||g||^(1/2) (||g||^(1/2) + ||g_x||^(1/2)) ||h||^(1/2) (||h||^(1/2) + ||h_y||^(1/2))]`
/// with the numerator by refined quadrature.
pub fn triple_product_ratio(f: &ScalarSpectrum, g: &ScalarSpectrum, h: &ScalarSpectrum) -> f64 {
    let [pf, pg, ph] = [f, g, h].map(|s| refined_by(s, TRIPLE_REFINEMENT));
    let prod = pf.values().iter().zip(pg.values()).zip(ph.values()).map(|((a, b), c)| (a * b * c).abs()).collect();
    let num = PhysicalField::from_values(*pf.grid(), prod).integrate();
    let (ng, nh) = (l2_norm(g), l2_norm(h));
    let den = l2_norm(f)
        * ng.sqrt()
        * (ng.sqrt() + l2_norm(&dx(g)).sqrt())
        * nh.sqrt()
        * (nh.sqrt() + l2_norm(&dy(h)).sqrt());
    safe_ratio(num, den)
}

/// `||f||_inf / (||f||_1 + ||f_x||_1 + ||f_y||_1 + ||f_xy||_1)` on the refined grid.
pub fn linfty_l1_ratio(f: &ScalarSpectrum) -> f64 {
    let fy = dy(f);
    let pf = refined(f);
    let den = pf.l1_norm() + refined(&dx(f)).l1_norm() + refined(&fy).l1_norm() + refined(&dx(&fy)).l1_norm();
    safe_ratio(pf.max_abs(), den)
}

/// `||v|| / ||v_y||`.
pub fn poincare_wall_ratio(v: &ScalarSpectrum) -> f64 {
    safe_ratio(l2_norm(v), l2_norm(&dy(v)))
}

/// `||g~|| / ||g~_x||` for the oscillation part of `g`.
pub fn poincare_mean_ratio(g: &ScalarSpectrum) -> f64 {
    let t = g.without_mean();
    safe_ratio(l2_norm(&t), l2_norm(&dx(&t)))
}

/// `int (u . grad w) . w` with dealiased products, exact for band-limited input.
pub fn transport_integral(u: &VelocityPair, w: &VelocityPair) -> Result<f64, SpectralError> {
    let mut a = multiply_dealiased(&u.u, &dx(&w.u))?;
    a.axpy(1.0, &multiply_dealiased(&u.v, &dy(&w.u))?);
    let mut b = multiply_dealiased(&u.u, &dx(&w.v))?;
    b.axpy(1.0, &multiply_dealiased(&u.v, &dy(&w.v))?);
    Ok(a.inner(&w.u) + b.inner(&w.v))
}

/// `|int (u . grad w) . w| / (||u|| ||w||_H1^2)`.
pub fn transport_ratio(u: &VelocityPair, w: &VelocityPair) -> Result<f64, SpectralError> {
    let h1 = w.inner(w) + [&w.u, &w.v].iter().map(|c| dx(c).inner(&dx(c)) + dy(c).inner(&dy(c))).sum::<f64>();
    Ok(safe_ratio(transport_integral(u, w)?.abs(), u.l2_norm() * h1))
}

fn safe_ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Ratio of `id` on a trial field set laid out as in `InequalityId::bases`.
fn evaluate(id: InequalityId, fields: &[ScalarSpectrum]) -> f64 {
    let r = match id {
        InequalityId::TripleProduct => triple_product_ratio(&fields[0], &fields[1], &fields[2]),
        InequalityId::LinftyL1 => linfty_l1_ratio(&fields[0]),
        InequalityId::PoincareWall => poincare_wall_ratio(&fields[0]),
        InequalityId::PoincareMean => poincare_mean_ratio(&fields[0]),
        InequalityId::TransportOrthogonality => {
            let s = FlowState::new(fields[1].clone(), fields[0].mean_profile(), 0.0).expect("bases match");
            let w = VelocityPair::new(fields[2].clone(), fields[3].clone()).expect("bases match");
            transport_ratio(&velocity(&s), &w).expect("same grid")
        }
    };
    if r.is_nan() {
        0.0
    } else {
        r
    }
}

/// Removes the modes field `i` of `id` may not carry.
fn restrict(id: InequalityId, i: usize, s: ScalarSpectrum) -> ScalarSpectrum {
    s.map_modes(|k1, _, c| if id.admits(i, k1) { c } else { c * 0.0 })
}

/// Trial fields for one seed: one band `b` in `1..=kmax` shared by all fields.
fn trial_fields(
    id: InequalityId,
    grid: SpectralGrid,
    kmax: usize,
    seed: u64,
) -> Result<Vec<ScalarSpectrum>, AuditError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = rng.random_range(1..=kmax);
    id.bases()
        .iter()
        .enumerate()
        .map(|(i, &basis)| {
            let s = random_band_limited(grid, rng.random(), band, basis)?;
            Ok(restrict(id, i, s))
        })
        .collect()
}

fn full_band_fields(
    id: InequalityId,
    grid: SpectralGrid,
    kmax: usize,
    seed: u64,
) -> Result<Vec<ScalarSpectrum>, AuditError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    id.bases()
        .iter()
        .enumerate()
        .map(|(i, &basis)| Ok(restrict(id, i, random_band_limited(grid, rng.random(), kmax, basis)?)))
        .collect()
}

/// Monte-Carlo audit over `n` seeded trials.
pub fn audit(id: InequalityId, n: usize, kmax: usize, seed: u64) -> Result<AuditReport, AuditError> {
    if n == 0 {
        return Err(AuditError::NoTrials);
    }
    let grid = audit_grid(kmax)?;
    let threshold = id.violation_threshold();
    let mut best = (f64::NEG_INFINITY, seed);
    let mut violations = 0;
    for i in 0..n {
        let trial_seed = seed.wrapping_add(i as u64);
        let r = evaluate(id, &trial_fields(id, grid, kmax, trial_seed)?);
        if threshold.is_some_and(|t| r > t) {
            violations += 1;
        }
        // strict comparison keeps the earliest (smallest) seed on ties
        if r > best.0 {
            best = (r, trial_seed);
        }
    }
    Ok(AuditReport {
        inequality_id: id,
        n_trials: n,
        kmax,
        max_ratio: best.0,
        violations,
        fitted_constant: best.0,
        argmax_seed: best.1,
    })
}

pub fn audit_triple_product(n: usize, kmax: usize, seed: u64) -> Result<AuditReport, AuditError> {
    audit(InequalityId::TripleProduct, n, kmax, seed)
}

pub fn audit_linfty_l1(n: usize, kmax: usize, seed: u64) -> Result<AuditReport, AuditError> {
    audit(InequalityId::LinftyL1, n, kmax, seed)
}

pub fn audit_poincare_wall(n: usize, kmax: usize, seed: u64) -> Result<AuditReport, AuditError> {
    audit(InequalityId::PoincareWall, n, kmax, seed)
}

pub fn audit_poincare_mean(n: usize, kmax: usize, seed: u64) -> Result<AuditReport, AuditError> {
    audit(InequalityId::PoincareMean, n, kmax, seed)
}

pub fn audit_transport_orthogonality(n: usize, kmax: usize, seed: u64) -> Result<AuditReport, AuditError> {
    audit(InequalityId::TransportOrthogonality, n, kmax, seed)
}

/// Starting point of the adversarial search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStart {
    /// Best of this many Monte-Carlo trials with the search seed.
    MonteCarlo { trials: usize },
    /// A generic random field using the whole band.
    FullBand,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Hill-climbing iterations (each costs at most two ratio evaluations).
    pub iters: usize,
    pub restarts: usize,
    /// Stagnant iterations before the step is halved.
    pub stagnation: usize,
    pub start: SearchStart,
}

impl SearchConfig {
    pub fn new(iters: usize) -> Self {
        SearchConfig { iters, restarts: 5, stagnation: 20, start: SearchStart::MonteCarlo { trials: iters } }
    }
}

/// One optimization coordinate: real or imaginary part of mode `(k1, k2)` of a field.
#[derive(Debug, Clone, Copy)]
struct Coord {
    field: usize,
    k1: i64,
    k2: usize,
    imag: bool,
}

fn coordinates(id: InequalityId, grid: &SpectralGrid, kmax: usize) -> Vec<Coord> {
    let mut out = Vec::new();
    for (field, &basis) in id.bases().iter().enumerate() {
        for k2 in 0..=kmax {
            if !basis.holds(k2, grid.ny()) {
                continue;
            }
            for k1 in 0..=kmax as i64 {
                if !id.admits(field, k1) {
                    continue;
                }
                out.push(Coord { field, k1, k2, imag: false });
                if k1 != 0 {
                    out.push(Coord { field, k1, k2, imag: true });
                }
            }
        }
    }
    out
}

fn nudge(fields: &[ScalarSpectrum], c: Coord, delta: f64) -> Vec<ScalarSpectrum> {
    let mut out = fields.to_vec();
    let mut z = out[c.field].get(c.k1, c.k2);
    if c.imag {
        z.im += delta;
    } else {
        z.re += delta;
    }
    out[c.field].set_mode(c.k1, c.k2, z);
    out
}

/// Derivative-free maximization of the audit ratio: random-coordinate
/// perturbation, step halving after `stagnation` non-improving iterations,
/// restart from the incumbent with the initial step when the step collapses.
pub fn adversarial_search(
    id: InequalityId,
    kmax: usize,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<AuditReport, AuditError> {
    if cfg.iters == 0 {
        return Err(AuditError::NoTrials);
    }
    let grid = audit_grid(kmax)?;
    let (mut best, mut best_fields, argmax_seed, mut evals) = match cfg.start {
        SearchStart::MonteCarlo { trials } => {
            let mc = audit(id, trials.max(1), kmax, seed)?;
            let fields = trial_fields(id, grid, kmax, mc.argmax_seed)?;
            (mc.max_ratio, fields, mc.argmax_seed, mc.n_trials)
        }
        SearchStart::FullBand => {
            let fields = full_band_fields(id, grid, kmax, seed)?;
            (evaluate(id, &fields), fields, seed, 1)
        }
    };
    let coords = coordinates(id, &grid, kmax);
    let step0 = 0.5
        * best_fields
            .iter()
            .flat_map(|f| f.coeffs().iter().map(|c| c.norm()))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ad5e_7a11_0000);
    let mut step = step0;
    let mut stagnant = 0;
    let mut restarts = 0;
    for _ in 0..cfg.iters {
        let c = coords[rng.random_range(0..coords.len())];
        let mut improved = false;
        for sign in [1.0, -1.0] {
            // keep moving along a successful direction, doubling the stride
            let mut delta = sign * step;
            loop {
                let trial = nudge(&best_fields, c, delta);
                let r = evaluate(id, &trial);
                evals += 1;
                if r <= best {
                    break;
                }
                best = r;
                best_fields = trial;
                improved = true;
                delta *= 2.0;
            }
            if improved {
                break;
            }
        }
        if improved {
            stagnant = 0;
            continue;
        }
        stagnant += 1;
        if stagnant >= cfg.stagnation {
            stagnant = 0;
            step *= 0.5;
            if step < 1e-12 * step0 {
                if restarts == cfg.restarts {
                    break;
                }
                restarts += 1;
                step = step0;
            }
        }
    }
    let violations = usize::from(id.violation_threshold().is_some_and(|t| best > t));
    Ok(AuditReport {
        inequality_id: id,
        n_trials: evals,
        kmax,
        max_ratio: best,
        violations,
        fitted_constant: best,
        argmax_seed,
    })
}

/// Adversarial search warm-started from the best of `iters` Monte-Carlo trials.
pub fn adversarial_ratio_search(
    id: InequalityId,
    kmax: usize,
    iters: usize,
    seed: u64,
) -> Result<AuditReport, AuditError> {
    adversarial_search(id, kmax, seed, &SearchConfig::new(iters))
}
