//! The `run` command: builds the scenario, integrates it while streaming
//! diagnostics and snapshots into the run directory, evaluates the enabled
//! monitors and records the outcome in the manifest.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use hvns_core::diagnostics::{
    check_asymptotics, fit_exponential_decay, Bound, DiagnosticsRecord, MonitorConfig, MonitorSet,
};
use hvns_core::flow::FlowState;
use hvns_core::stepper::{integrate, Observer, ObserverError, RunStatus, StepError};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Scenario};
use crate::scenarios::{build_scenario, ScenarioError};
use crate::{snapshot, ExitStatus};

/// Overrides `output.run_dir` of run configs and `run_dir` of audit configs.
pub const OUTPUT_DIR_ENV: &str = "HVNS_OUTPUT_DIR";

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub const CSV_COLUMNS: [&str; 20] = [
    "t",
    "energy",
    "enstrophy",
    "u_l2",
    "ux_l2",
    "uy_l2",
    "v_l2",
    "vx_l2",
    "omega_l2",
    "grad_omega_l2",
    "h2_norm",
    "osc_vorticity_l2",
    "mean_profile_l2",
    "energy_residual",
    "enstrophy_residual",
    "e1_margin",
    "e2_margin",
    "v2_margin",
    "v20_margin",
    "twin_distance",
];

pub fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// `HVNS_OUTPUT_DIR` if set and non-empty, else `configured`.
pub fn resolve_output_dir(configured: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.to_path_buf(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Running,
    Passed,
    MonitorFailure,
    CflViolation,
    NonFinite,
    IoError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed {
        t: f64,
    },
    CflViolation {
        t: f64,
        #[serde(with = "lossless_f64")]
        courant: f64,
        limit: f64,
    },
    NonFinite {
        t: f64,
    },
    IoError {
        message: String,
    },
}

/// JSON has no NaN or infinity, so those travel as the strings "NaN",
/// "inf" and "-inf".
mod lossless_f64 {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        match *x {
            x if x.is_finite() => Repr::Num(x),
            x if x.is_nan() => Repr::Text("NaN".into()),
            x if x > 0.0 => Repr::Text("inf".into()),
            _ => Repr::Text("-inf".into()),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(D::Error::custom(format!("expected a number, \"NaN\", \"inf\" or \"-inf\", got {t:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedProvenance {
    pub initial: Option<u64>,
    pub forcing: Option<u64>,
    pub twin: Option<u64>,
}

impl SeedProvenance {
    fn of(cfg: &RunConfig) -> Self {
        let random_initial =
            matches!(cfg.scenario, Scenario::FreeDecay | Scenario::ShearStability | Scenario::ForcedH2);
        SeedProvenance {
            initial: random_initial.then_some(cfg.initial.seed),
            forcing: cfg.forcing.as_ref().map(|f| f.seed),
            twin: cfg.monitors.twin.as_ref().map(|t| t.seed),
        }
    }
}

/// Outcome of one monitor. `value` is compared against `limit` in the sense
/// described by `detail`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    #[serde(with = "lossless_f64")]
    pub value: f64,
    #[serde(with = "lossless_f64")]
    pub limit: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        CheckResult { name: name.into(), passed, value, limit, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub code_version: String,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub status: RunState,
    pub termination: Option<Termination>,
    pub exit_code: Option<i32>,
    pub seeds: SeedProvenance,
    pub steps: Option<usize>,
    pub checks: Vec<CheckResult>,
}

impl RunManifest {
    pub fn read(dir: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    fn write(&self, dir: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(dir.join(MANIFEST_FILE), text + "\n")
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn csv_row(r: &DiagnosticsRecord) -> Vec<String> {
    let n = &r.norms;
    let mut row: Vec<String> = [
        r.t,
        r.energy,
        r.enstrophy,
        n.u_l2,
        n.ux_l2,
        n.uy_l2,
        n.v_l2,
        n.vx_l2,
        n.omega_l2,
        n.grad_omega_l2,
        n.h2_norm,
        r.osc_vorticity_l2,
        r.mean_profile_l2,
        r.energy_residual,
        r.enstrophy_residual,
        r.e1_margin,
        r.e2_margin,
        r.v2_margin,
        r.v20_margin,
    ]
    .iter()
    .map(|x| format_f64(*x))
    .collect();
    row.push(r.twin_distance.map(format_f64).unwrap_or_default());
    row
}

/// Streams records to `diagnostics.csv` and snapshots to `snapshots/`.
struct RunWriter {
    csv: csv::Writer<BufWriter<File>>,
    snapshot_dir: Option<PathBuf>,
}

impl RunWriter {
    fn create(dir: &Path, snapshots: bool) -> io::Result<Self> {
        let mut csv = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(DIAGNOSTICS_FILE))?));
        csv.write_record(CSV_COLUMNS)?;
        let snapshot_dir = if snapshots {
            let d = dir.join(SNAPSHOT_DIR);
            fs::create_dir_all(&d)?;
            Some(d)
        } else {
            None
        };
        Ok(RunWriter { csv, snapshot_dir })
    }

    fn finish(mut self) -> io::Result<()> {
        self.csv.flush()?;
        self.csv.into_inner().map_err(|e| e.into_error())?.get_mut().sync_all()
    }
}

pub fn snapshot_name(step: usize) -> String {
    format!("step_{step:08}.anse")
}

impl Observer for RunWriter {
    fn on_record(&mut self, record: &DiagnosticsRecord) -> Result<(), ObserverError> {
        self.csv.write_record(csv_row(record))?;
        Ok(())
    }

    fn on_snapshot(&mut self, state: &FlowState, step: usize) -> Result<(), ObserverError> {
        if let Some(dir) = &self.snapshot_dir {
            snapshot::write(&dir.join(snapshot_name(step)), state)?;
        }
        Ok(())
    }
}

/// Everything a caller may want back from a run besides the files.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit: ExitStatus,
    pub manifest: Option<RunManifest>,
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: Option<FlowState>,
    pub message: Option<String>,
}

impl RunOutcome {
    fn early(exit: ExitStatus, message: String) -> Self {
        RunOutcome { exit, manifest: None, records: Vec::new(), final_state: None, message: Some(message) }
    }
}

fn monitor_config(cfg: &RunConfig) -> MonitorConfig {
    let m = &cfg.monitors;
    MonitorConfig {
        bound_tolerance: m.bound_tolerance,
        twin_perturbation: m.twin.as_ref().map(|t| t.perturbation),
        twin_seed: m.twin.as_ref().map_or(0, |t| t.seed),
        keep_profiles: m.asymptotics.is_some(),
    }
}

/// Runs `cfg` in its configured directory, honouring `HVNS_OUTPUT_DIR`.
pub fn run(cfg: &RunConfig) -> RunOutcome {
    run_in(cfg, &resolve_output_dir(&cfg.output.run_dir))
}

/// Runs `cfg` with every artifact written under `dir`.
pub fn run_in(cfg: &RunConfig, dir: &Path) -> RunOutcome {
    let (s0, forcing) = match build_scenario(cfg) {
        Ok(x) => x,
        Err(e @ ScenarioError::Snapshot(_)) => return RunOutcome::early(ExitStatus::Io, e.to_string()),
        Err(e) => return RunOutcome::early(ExitStatus::Usage, e.to_string()),
    };
    let io_fail = |e: io::Error| RunOutcome::early(ExitStatus::Io, format!("{}: {e}", dir.display()));
    if let Err(e) = fs::create_dir_all(dir) {
        return io_fail(e);
    }
    let mut manifest = RunManifest {
        config: cfg.clone(),
        code_version: code_version(),
        started_at: now(),
        finished_at: None,
        status: RunState::Running,
        termination: None,
        exit_code: None,
        seeds: SeedProvenance::of(cfg),
        steps: None,
        checks: Vec::new(),
    };
    if let Err(e) = manifest.write(dir) {
        return io_fail(e);
    }
    let mut writer = match RunWriter::create(dir, cfg.output.snapshot_every.is_some()) {
        Ok(w) => w,
        Err(e) => return finish_io(manifest, dir, e.to_string()),
    };

    let mut monitors = MonitorSet::new(&s0, &forcing, monitor_config(cfg));
    let traj = match integrate(&s0, &forcing, &cfg.stepper_config(), &mut monitors, &mut writer) {
        Ok(t) => t,
        Err(StepError::Observer(e)) => return finish_io(manifest, dir, e.to_string()),
        Err(e @ StepError::Config(_)) => return RunOutcome::early(ExitStatus::Usage, e.to_string()),
    };
    if let Err(e) = writer.finish() {
        return finish_io(manifest, dir, e.to_string());
    }

    manifest.checks = evaluate_checks(cfg, &monitors);
    manifest.steps = Some(traj.steps);
    let all_pass = manifest.checks.iter().all(|c| c.passed);
    let (status, termination, exit) = match traj.status {
        RunStatus::Completed if all_pass => {
            (RunState::Passed, Termination::Completed { t: traj.final_state.time() }, ExitStatus::Success)
        }
        RunStatus::Completed => (
            RunState::MonitorFailure,
            Termination::Completed { t: traj.final_state.time() },
            ExitStatus::MonitorFailure,
        ),
        RunStatus::CflViolation { t, courant, limit } => {
            (RunState::CflViolation, Termination::CflViolation { t, courant, limit }, ExitStatus::MonitorFailure)
        }
        RunStatus::NonFinite { t } => (RunState::NonFinite, Termination::NonFinite { t }, ExitStatus::NonFinite),
    };
    manifest.status = status;
    manifest.termination = Some(termination);
    manifest.exit_code = Some(exit.code());
    manifest.finished_at = Some(now());
    if let Err(e) = manifest.write(dir) {
        return io_fail(e);
    }
    RunOutcome {
        exit,
        manifest: Some(manifest),
        records: traj.records,
        final_state: Some(traj.final_state),
        message: None,
    }
}

fn finish_io(mut manifest: RunManifest, dir: &Path, message: String) -> RunOutcome {
    manifest.status = RunState::IoError;
    manifest.termination = Some(Termination::IoError { message: message.clone() });
    manifest.exit_code = Some(ExitStatus::Io.code());
    manifest.finished_at = Some(now());
    // best effort: the directory may be the thing that failed
    let _ = manifest.write(dir);
    RunOutcome { manifest: Some(manifest), ..RunOutcome::early(ExitStatus::Io, message) }
}

/// Enabled monitors evaluated over a finished (or aborted) run.
pub fn evaluate_checks(cfg: &RunConfig, monitors: &MonitorSet) -> Vec<CheckResult> {
    let m = &cfg.monitors;
    let records = monitors.records();
    let mut out = Vec::new();
    if records.is_empty() {
        return out;
    }
    if m.bounds {
        for (bound, check) in Bound::ALL.iter().zip(monitors.bound_checks()) {
            out.push(CheckResult::new(
                &format!("bound_{}", bound.id()),
                check.passed,
                check.min_relative_margin,
                -m.bound_tolerance,
                format!("smallest relative margin {:e} at t = {}", check.min_relative_margin, check.t_worst),
            ));
        }
    }
    if let Some(tol) = m.budget_tolerance {
        let worst = records.iter().map(|r| r.energy_residual.abs()).fold(0.0, f64::max);
        out.push(CheckResult::new(
            "energy_budget",
            worst <= tol,
            worst,
            tol,
            "largest |energy residual| must not exceed the limit",
        ));
    }
    if let Some(twin) = &m.twin {
        let worst = records.iter().filter_map(|r| r.twin_distance).fold(0.0, f64::max) / twin.perturbation;
        out.push(CheckResult::new(
            "twin_growth",
            worst <= twin.max_growth,
            worst,
            twin.max_growth,
            "largest twin distance over the initial perturbation",
        ));
    }
    if let Some(a) = &m.asymptotics {
        let rep = check_asymptotics(records, monitors.profiles(), a.threshold, a.cauchy_constant);
        out.push(CheckResult::new(
            "oscillation_decay",
            rep.converged,
            rep.final_oscillation,
            a.threshold,
            "final ||u~|| + ||v|| must not exceed the limit",
        ));
        out.push(CheckResult::new(
            "mean_profile_cauchy",
            rep.cauchy_ok,
            rep.worst_cauchy_ratio,
            1.0,
            format!("worst ||ubar(t) - ubar(s)|| over C * dissipation integral with C = {}", a.cauchy_constant),
        ));
        out.push(CheckResult::new(
            "momentum_conservation",
            rep.momentum_drift <= a.momentum_tolerance,
            rep.momentum_drift,
            a.momentum_tolerance,
            "drift of the total mean momentum",
        ));
    }
    if m.scenario_checks {
        out.extend(scenario_check(cfg, records));
    }
    out
}

fn scenario_check(cfg: &RunConfig, records: &[DiagnosticsRecord]) -> Option<CheckResult> {
    let (first, last) = (records.first()?, records.last()?);
    match cfg.scenario {
        Scenario::TaylorGreen => {
            let measured = last.norms.omega_l2 / first.norms.omega_l2;
            let exact = (-4.0 * PI * PI * (last.t - first.t)).exp();
            let rel = (measured / exact - 1.0).abs();
            Some(CheckResult::new(
                "taylor_green_decay",
                rel <= cfg.monitors.decay_tolerance,
                measured,
                exact,
                format!("||omega(T)|| / ||omega(0)|| against exp(-4 pi^2 T), relative error {rel:e}"),
            ))
        }
        Scenario::ShearStability => {
            let series: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.osc_vorticity_l2)).collect();
            Some(match fit_exponential_decay(&series) {
                Ok(fit) => CheckResult::new(
                    "shear_stability_decay",
                    fit.r_squared > cfg.monitors.min_r_squared && fit.rate > 0.0,
                    fit.r_squared,
                    cfg.monitors.min_r_squared,
                    format!("fit of ln ||omega~||^2: rate {}, {} points", fit.rate, fit.points),
                ),
                Err(e) => CheckResult::new(
                    "shear_stability_decay",
                    false,
                    f64::NAN,
                    cfg.monitors.min_r_squared,
                    e.to_string(),
                ),
            })
        }
        Scenario::ForcedH2 => {
            let plateau = h2_plateau(records);
            Some(CheckResult::new(
                "h2_plateau",
                plateau.passed,
                plateau.t_peak,
                plateau.t_half,
                format!(
                    "H2 supremum {} at t = {}; final-third maximum {}",
                    plateau.peak, plateau.t_peak, plateau.tail_max
                ),
            ))
        }
        _ => None,
    }
}

/// Shape of the H2 history of a forced run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2Plateau {
    pub peak: f64,
    pub t_peak: f64,
    pub t_half: f64,
    pub tail_max: f64,
    /// Peak strictly before the midpoint and final-third maximum not above it.
    pub passed: bool,
}

pub fn h2_plateau(records: &[DiagnosticsRecord]) -> H2Plateau {
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.norms.h2_norm)).collect();
    h2_plateau_of(&series)
}

pub fn h2_plateau_of(series: &[(f64, f64)]) -> H2Plateau {
    let (t0, t1) = (series.first().map_or(0.0, |p| p.0), series.last().map_or(0.0, |p| p.0));
    let t_half = t0 + 0.5 * (t1 - t0);
    let t_tail = t0 + (2.0 / 3.0) * (t1 - t0);
    let (t_peak, peak) =
        series.iter().copied().fold((t0, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    let tail_max = series.iter().filter(|p| p.0 >= t_tail).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    H2Plateau { peak, t_peak, t_half, tail_max, passed: peak.is_finite() && t_peak < t_half && tail_max <= peak }
}

pub(crate) fn write_text(path: &Path, text: &str) -> io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(text.as_bytes())?;
    f.flush()
}
