//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use hvns::audit::run_audit_in;
use hvns::config::{parse_audit_config, parse_config, DtSetting, RunConfig, Scenario};
use hvns::run::{run_in, RunOutcome, DIAGNOSTICS_FILE};
use hvns::scenarios::build_scenario;
use hvns::ExitStatus;
use hvns_core::audit::{audit_grid, linfty_l1_ratio, InequalityId};
use hvns_core::diagnostics::{fit_exponential_decay, DiagnosticsRecord};
use hvns_core::elliptic::{solve_dirichlet, solve_mode_fd, verify_phi_estimates};
use hvns_core::flow::{velocity, FlowState, VelocityPair};
use hvns_core::spectral::{
    dx, dy, l2_norm, multiply_dealiased, random_band_limited, ScalarSpectrum, SpectralGrid, YBasis,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: pass flag and a one-line summary.
type Verdict = (bool, String);
type Criterion = (&'static str, fn() -> Verdict);

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    let p = configs().join(name);
    parse_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn run_config(cfg: &RunConfig, dir: &Path) -> RunOutcome {
    let out = run_in(cfg, dir);
    if out.exit == ExitStatus::Io {
        panic!("{}: {:?}", dir.display(), out.message);
    }
    out
}

fn check_value(out: &RunOutcome, name: &str) -> Option<f64> {
    out.manifest.as_ref()?.checks.iter().find(|c| c.name == name).map(|c| c.value)
}

fn fixed_dt(cfg: &RunConfig) -> Option<f64> {
    match cfg.stepper.dt {
        DtSetting::Fixed(dt) => Some(dt),
        DtSetting::Auto(_) => None,
    }
}

fn taylor_green_decay() -> Verdict {
    let cfg = load("taylor_green.json");
    let setup_ok = cfg.scenario == Scenario::TaylorGreen
        && (cfg.grid.nx, cfg.grid.ny) == (64, 64)
        && fixed_dt(&cfg) == Some(1e-4)
        && cfg.stepper.t_end == 0.1
        && cfg.forcing.is_none();

    // the initial streamfunction is sin(2 pi x) sin(pi y) pointwise
    let (s0, _) = build_scenario(&cfg).unwrap();
    let shape_err = (0..7)
        .flat_map(|i| (0..7).map(move |j| (i as f64 / 7.0, j as f64 / 6.0)))
        .map(|(x, y)| (s0.psi().evaluate(x, y) - (2.0 * PI * x).sin() * (PI * y).sin()).abs())
        .fold(0.0, f64::max);

    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&cfg, dir.path());
    let (first, last) = (out.records.first().unwrap(), out.records.last().unwrap());
    let ratio = last.norms.omega_l2 / first.norms.omega_l2;
    let exact = (-4.0 * PI * PI * 0.1).exp();
    let rel = (ratio / exact - 1.0).abs();
    let reached = (last.t - 0.1).abs() < 1e-12;
    (
        setup_ok && shape_err < 1e-12 && reached && rel <= 1e-5,
        format!(
            "||w(T)||/||w(0)|| = {ratio:.15e}, exp(-4 pi^2 T) = {exact:.15e}, relative error {rel:.2e} (limit 1e-5)"
        ),
    )
}

fn sq(f: &ScalarSpectrum) -> f64 {
    f.inner(f)
}

fn identities() -> Verdict {
    let g = SpectralGrid::new(64, 64).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let kmax = 1 + (seed as usize % g.max_band());
        let s = FlowState::random(g, seed, kmax, 1.0).unwrap();
        let VelocityPair { u, v } = velocity(&s);
        let omega = dx(&v).sub(&dy(&u));
        let (ux, uy, vx, vy) = (dx(&u), dy(&u), dx(&v), dy(&v));
        let grad_u = (sq(&ux) + sq(&uy) + sq(&vx) + sq(&vy)).sqrt();
        let omega_x = dx(&omega);
        let grad_ux = (sq(&dx(&ux)) + sq(&dy(&ux)) + sq(&dx(&vx)) + sq(&dy(&vx))).sqrt();
        worst = worst.max((l2_norm(&omega) - grad_u).abs() / grad_u).max((l2_norm(&omega_x) - grad_ux).abs() / grad_ux);
    }
    (worst <= 1e-12, format!("100 random states at 64x64, worst relative gap {worst:.2e} (limit 1e-12)"))
}

fn bound_monitors() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["free_decay.json", "forced.json", "shear_stability_bounds.json"] {
        let cfg = load(name);
        ok &= fixed_dt(&cfg) == Some(1e-4) && cfg.stepper.t_end == 1.0 && (cfg.grid.nx, cfg.grid.ny) == (64, 64);
        let dir = tempfile::tempdir().unwrap();
        let out = run_config(&cfg, dir.path());
        ok &= out.records.last().is_some_and(|r| (r.t - 1.0).abs() < 1e-12);
        let worst = out.records.iter().flat_map(DiagnosticsRecord::margins).fold(f64::INFINITY, f64::min);
        for b in ["bound_e1", "bound_e2", "bound_v2", "bound_v20"] {
            ok &= check_value(&out, b).is_some_and(|m| m >= -1e-8);
        }
        ok &= worst >= -1e-8;
        parts.push(format!("{} min margin {worst:.2e}", cfg.scenario));
    }
    (ok, format!("{} (limit -1e-8)", parts.join(", ")))
}

/// Max nodal error of the FD solve for `g(y) = y (1 - y) e^y` at `k1 = 1`.
fn manufactured_error(n: usize) -> f64 {
    let g = |y: f64| y * (1.0 - y) * y.exp();
    let gyy = |y: f64| -y * (3.0 + y) * y.exp();
    let k2 = 4.0 * PI * PI;
    let rhs: Vec<Complex64> =
        (0..=n).map(|j| j as f64 / n as f64).map(|y| Complex64::new(k2 * g(y) - gyy(y), 0.0)).collect();
    let phi = solve_mode_fd(k2, &rhs);
    (0..=n).map(|j| (phi[j].re - g(j as f64 / n as f64)).abs()).fold(0.0, f64::max)
}

fn poisson_and_phi() -> Verdict {
    let g = SpectralGrid::new(64, 64).unwrap();
    let mut residual: f64 = 0.0;
    for seed in 0..20u64 {
        let rhs = random_band_limited(g, seed, 1 + seed as usize, YBasis::SineY).unwrap();
        let phi = solve_dirichlet(&rhs).unwrap();
        residual = residual.max(l2_norm(&phi.laplacian().scale(-1.0).sub(&rhs)) / l2_norm(&rhs));
    }

    let orders: Vec<f64> =
        [32, 64, 128, 256].iter().map(|&n| (manufactured_error(n) / manufactured_error(2 * n)).log2()).collect();
    let order_ok = orders.iter().all(|o| (o - 2.0).abs() <= 0.1);

    let g32 = SpectralGrid::new(32, 32).unwrap();
    let n = 256;
    let (mut satisfied, mut h2_gap) = (0, 0.0f64);
    for seed in 0..100u64 {
        let s = FlowState::random(g32, seed, 10, 1.0).unwrap();
        let r = verify_phi_estimates(&velocity(&s), n).unwrap();
        if r.satisfied == [true; 3] {
            satisfied += 1;
        }
        h2_gap = h2_gap.max((r.lhs_h2_sum() - r.rhs_h2).abs() / r.rhs_h2);
    }
    let h2_limit = 10.0 / (n * n) as f64;
    (
        residual <= 1e-12 && order_ok && satisfied == 100 && h2_gap <= h2_limit,
        format!(
            "dirichlet residual {residual:.2e}; FD orders {orders:.3?}; phi estimates {satisfied}/100; \
             H2 equality gap {h2_gap:.2e} (limit {h2_limit:.2e})"
        ),
    )
}

fn audits() -> Verdict {
    let cfg = parse_audit_config(&configs().join("audit.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_audit_in(&cfg, dir.path());
    let find = |id: InequalityId| out.reports.iter().filter(move |r| r.inequality_id == id);

    let one = |id| find(id).next().unwrap_or_else(|| panic!("{id} missing from audit.json"));
    let wall = one(InequalityId::PoincareWall);
    let mean = one(InequalityId::PoincareMean);
    let linf = one(InequalityId::LinftyL1);
    let transport = one(InequalityId::TransportOrthogonality);
    let wall_ok = wall.n_trials >= 10_000 && (wall.max_ratio - 1.0 / PI).abs() <= 1e-12;
    let mean_ok = mean.n_trials >= 10_000 && (mean.max_ratio - 0.5 / PI).abs() <= 1e-12;

    let mut constant = ScalarSpectrum::zeros(audit_grid(8).unwrap(), YBasis::CosineY);
    constant.set_mode(0, 0, Complex64::new(1.0, 0.0));
    let const_ratio = linfty_l1_ratio(&constant);
    let linf_ok = linf.n_trials >= 10_000 && linf.violations == 0 && (const_ratio - 1.0).abs() <= 1e-12;

    let triple: HashMap<usize, f64> = find(InequalityId::TripleProduct).map(|r| (r.kmax, r.max_ratio)).collect();
    let ratios: Vec<f64> = [8, 16, 32].iter().filter_map(|k| triple.get(k).copied()).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let triple_ok = ratios.len() == 3 && hi / lo - 1.0 <= 0.1;
    let transport_ok = transport.n_trials >= 1000 && transport.violations == 0;

    (
        out.exit == ExitStatus::Success && wall_ok && mean_ok && linf_ok && triple_ok && transport_ok,
        format!(
            "wall {:.15e} vs 1/pi; mean {:.15e} vs 1/(2 pi); linfty_l1 {} violations in {}, constant ratio {const_ratio}; \
             triple spread {:.2e} (limit 0.1); transport {} violations in {}",
            wall.max_ratio,
            mean.max_ratio,
            linf.violations,
            linf.n_trials,
            hi / lo - 1.0,
            transport.violations,
            transport.n_trials
        ),
    )
}

fn shear_stability() -> Verdict {
    let cfg = load("shear_stability.json");
    let setup_ok = cfg.scenario == Scenario::ShearStability
        && cfg.initial.shear == 1.0
        && cfg.initial.perturbation == 1e-3
        && cfg.forcing.is_none()
        && cfg.stepper.t_end == 5.0;
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&cfg, dir.path());
    let eps0 = out.records[0].osc_vorticity_l2;
    let series: Vec<(f64, f64)> = out.records.iter().map(|r| (r.t, r.osc_vorticity_l2)).collect();
    let fit = fit_exponential_decay(&series).unwrap();
    (
        setup_ok && (eps0 - 1e-3).abs() <= 1e-15 && fit.r_squared > 0.999 && fit.rate > 0.0,
        format!("ln ||w~||^2 fit over {} points: r^2 {:.12}, rate {:.4}", fit.points, fit.r_squared, fit.rate),
    )
}

fn asymptotics() -> Verdict {
    let cfg = load("asymptotics.json");
    let a = cfg.monitors.asymptotics.clone().expect("asymptotics monitor enabled");
    let setup_ok = cfg.forcing.is_none()
        && cfg.stepper.t_end == 20.0
        && (cfg.grid.nx, cfg.grid.ny) == (64, 64)
        && a.cauchy_constant == 10.0;
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&cfg, dir.path());
    let (first, last) = (out.records.first().unwrap(), out.records.last().unwrap());
    let osc = last.norms.osc_u_l2 + last.norms.v_l2;
    let drift = (last.mean_momentum - first.mean_momentum).abs();
    let cauchy = out.manifest.as_ref().unwrap().checks.iter().find(|c| c.name == "mean_profile_cauchy").unwrap();
    (
        setup_ok && (last.t - 20.0).abs() < 1e-9 && osc <= 1e-6 && cauchy.passed && drift <= 1e-9,
        format!(
            "||u~|| + ||v|| = {osc:.2e} (limit 1e-6); Cauchy ratio {:.3e} with C = 10; momentum drift {drift:.2e} (limit 1e-9)",
            cauchy.value
        ),
    )
}

fn forced_h2() -> Verdict {
    let cfg = load("forced_h2.json");
    let f = cfg.forcing.clone().expect("forcing present");
    let (_, forcing) = build_scenario(&cfg).unwrap();
    let hyp_ok = f.mean_amplitude == 0.0 && forcing.fbar1().l2_norm() == 0.0 && cfg.validate().is_empty();
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&cfg, dir.path());
    let last = out.records.last().unwrap();
    let fi = last.forcing;
    let finite = [fi.f_l2, fi.curl_l2, fi.curl_sq, fi.dyy_f1_sq, fi.dy_f1_sq].iter().all(|x| x.is_finite());
    let t_end = last.t;
    let (t_peak, peak) = out.records.iter().map(|r| (r.t, r.norms.h2_norm)).fold((0.0, f64::NEG_INFINITY), |a, p| {
        if p.1 > a.1 {
            p
        } else {
            a
        }
    });
    let tail = out
        .records
        .iter()
        .filter(|r| r.t >= 2.0 * t_end / 3.0)
        .map(|r| r.norms.h2_norm)
        .fold(f64::NEG_INFINITY, f64::max);
    (
        hyp_ok && finite && out.exit == ExitStatus::Success && t_peak < t_end / 2.0 && tail <= peak,
        format!("H2 supremum {peak:.4} at t = {t_peak:.4} (T/2 = {}); final-third maximum {tail:.4}", t_end / 2.0),
    )
}

/// Random Hermitian spectrum on every stored mode except the x-Nyquist column.
fn random_full(grid: SpectralGrid, basis: YBasis, seed: u64) -> ScalarSpectrum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = ScalarSpectrum::zeros(grid, basis);
    for k2 in 0..=grid.ny() {
        if !basis.holds(k2, grid.ny()) {
            continue;
        }
        for k1 in 0..(grid.nx() / 2) as i64 {
            s.set_mode(k1, k2, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
    }
    s
}

/// Product of two truncated series by direct mode-pair expansion, kept on the retained band.
fn convolution(a: &ScalarSpectrum, b: &ScalarSpectrum) -> HashMap<(i64, usize), Complex64> {
    let g = a.grid();
    let (kx, ky) = (g.kx_cut() as i64, g.ky_cut());
    let mut out: HashMap<(i64, usize), Complex64> = HashMap::new();
    let mut add = |k1: i64, k2: usize, c: Complex64| {
        if k1.abs() <= kx && k2 <= ky {
            *out.entry((k1, k2)).or_default() += c;
        }
    };
    let modes = |s: &ScalarSpectrum| {
        let s = s.clone();
        (0..=ky).flat_map(move |k2| (-kx..=kx).map(move |k1| (k1, k2))).filter_map(move |(k1, k2)| {
            let c = s.get(k1, k2);
            (c.norm() != 0.0 && s.basis().holds(k2, s.grid().ny())).then_some((k1, k2, c))
        })
    };
    for (ka1, ka2, ca) in modes(a) {
        for (kb1, kb2, cb) in modes(b) {
            let c = ca * cb * 0.5;
            let k1 = ka1 + kb1;
            let (sum, diff) = (ka2 + kb2, ka2 as i64 - kb2 as i64);
            match (a.basis(), b.basis()) {
                // cos p cos q = [cos(p - q) + cos(p + q)] / 2
                (YBasis::CosineY, YBasis::CosineY) => {
                    add(k1, diff.unsigned_abs() as usize, c);
                    add(k1, sum, c);
                }
                // sin p sin q = [cos(p - q) - cos(p + q)] / 2
                (YBasis::SineY, YBasis::SineY) => {
                    add(k1, diff.unsigned_abs() as usize, c);
                    add(k1, sum, -c);
                }
                // sin p cos q = [sin(p + q) + sin(p - q)] / 2, p the sine index
                (sine, _) => {
                    let d = if sine == YBasis::SineY { diff } else { -diff };
                    add(k1, sum, c);
                    if d != 0 {
                        add(k1, d.unsigned_abs() as usize, c * d.signum() as f64);
                    }
                }
            }
        }
    }
    out
}

fn dealiasing() -> Verdict {
    let bases = [YBasis::CosineY, YBasis::SineY];
    let (mut grids, mut worst, mut seed) = (0, 0.0f64, 0u64);
    for nx in (4..=16).step_by(2) {
        for ny in 2..=16 {
            let g = SpectralGrid::new(nx, ny).unwrap();
            grids += 1;
            for &ba in &bases {
                for &bb in &bases {
                    seed += 1;
                    let a = random_full(g, ba, seed).dealiased();
                    let b = random_full(g, bb, seed + 10_000).dealiased();
                    let prod = multiply_dealiased(&a, &b).unwrap();
                    let want = convolution(&a, &b);
                    let scale = l2_norm(&a) * l2_norm(&b) + 1.0;
                    for k2 in 0..=ny {
                        for idx in 0..nx {
                            let k1 = g.k1_at(idx);
                            let w = if prod.basis().holds(k2, ny) {
                                want.get(&(k1, k2)).copied().unwrap_or_default()
                            } else {
                                Complex64::default()
                            };
                            worst = worst.max((prod.get(k1, k2) - w).norm() / scale);
                        }
                    }
                }
            }
        }
    }
    (worst <= 1e-12, format!("{grids} grids x 4 basis pairs, worst scaled error {worst:.2e} (limit 1e-12)"))
}

fn determinism() -> Verdict {
    let cfg = load("forced_h2.json");
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_config(&cfg, d1.path());
    run_config(&cfg, d2.path());
    let a = std::fs::read(d1.path().join(DIAGNOSTICS_FILE)).unwrap();
    let b = std::fs::read(d2.path().join(DIAGNOSTICS_FILE)).unwrap();
    (
        a == b && !a.is_empty(),
        format!("two runs of forced_h2.json: {} and {} bytes, identical: {}", a.len(), b.len(), a == b),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("taylor-green decay", taylor_green_decay),
        ("vorticity identities", identities),
        ("bound monitors", bound_monitors),
        ("poisson and phi", poisson_and_phi),
        ("inequality audits", audits),
        ("shear stability", shear_stability),
        ("asymptotics", asymptotics),
        ("forced H2 plateau", forced_h2),
        ("dealiasing oracle", dealiasing),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(v) => v,
            Err(e) => {
                let msg =
                    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} [{name}]: {} | {detail} | {:.1} s",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
