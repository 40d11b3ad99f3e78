//! Run and audit configuration. Files are UTF-8 JSON, one document each.
//! Unknown keys are rejected and every omitted key takes the default listed
//! on its field, so a parsed config is always complete and re-emits to a
//! document that parses back to the same value.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use hvns_core::audit::InequalityId;
use hvns_core::flow::Envelope;
use hvns_core::spectral::{Dealias, SpectralGrid};
use hvns_core::stepper::{StepperConfig, TimeStep};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snapshot;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: at `{key}`: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, key: String, message: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
}

impl ConfigError {
    /// The violated invariants of a `Validation` error.
    pub fn violations(&self) -> &[String] {
        match self {
            ConfigError::Validation(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    TaylorGreen,
    PureShear,
    FreeDecay,
    ShearStability,
    ForcedH2,
    Custom,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::TaylorGreen => "taylor_green",
            Scenario::PureShear => "pure_shear",
            Scenario::FreeDecay => "free_decay",
            Scenario::ShearStability => "shear_stability",
            Scenario::ForcedH2 => "forced_h2",
            Scenario::Custom => "custom",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Default 64.
    pub nx: usize,
    /// Default 64.
    pub ny: usize,
    /// Retained fraction of each axis as `"num/den"`. Default `"2/3"`.
    pub dealias: String,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nx: 64, ny: 64, dealias: "2/3".into() }
    }
}

impl GridConfig {
    fn dealias_fraction(&self) -> Result<Dealias, String> {
        let bad = || format!("grid.dealias must look like \"2/3\", got {:?}", self.dealias);
        let (a, b) = self.dealias.split_once('/').ok_or_else(bad)?;
        let num = a.trim().parse().map_err(|_| bad())?;
        let den = b.trim().parse().map_err(|_| bad())?;
        Dealias::new(num, den).map_err(|e| format!("grid.dealias: {e}"))
    }

    pub fn build(&self) -> Result<SpectralGrid, String> {
        let dealias = self.dealias_fraction()?;
        SpectralGrid::with_dealias(self.nx, self.ny, dealias).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

/// Either a nominal step length or `"auto"` for a CFL-limited step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSetting {
    Fixed(f64),
    Auto(AutoTag),
}

impl Default for DtSetting {
    fn default() -> Self {
        DtSetting::Auto(AutoTag::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperSection {
    /// Default `"auto"`.
    pub dt: DtSetting,
    /// Default 0.5.
    pub cfl: f64,
    /// Default 0.01.
    pub dt_max: f64,
    /// Default 1.0.
    pub t_end: f64,
}

impl Default for StepperSection {
    fn default() -> Self {
        let d = StepperConfig::default();
        StepperSection { dt: DtSetting::default(), cfl: d.cfl, dt_max: d.dt_max, t_end: d.t_end }
    }
}

/// Scenario parameters. Each scenario reads only the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    /// Streamfunction amplitude (taylor_green) or `||u||` (free_decay,
    /// forced_h2). Default 1.0.
    pub amplitude: f64,
    /// Seed of random states and perturbations. Default 0.
    pub seed: u64,
    /// Band limit of random states and perturbations. Default 8.
    pub kmax: usize,
    /// Shear slope `a` (pure_shear, shear_stability). Default 1.0.
    pub shear: f64,
    /// `||omega~||` of the shear_stability perturbation. Default 1e-3.
    pub perturbation: f64,
    /// Snapshot file for the custom scenario. Default none.
    pub snapshot: Option<PathBuf>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig { amplitude: 1.0, seed: 0, kmax: 8, shear: 1.0, perturbation: 1e-3, snapshot: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeConfig {
    Constant,
    ExponentialDecay { rate: f64 },
    RampOff { t_off: f64 },
}

impl From<EnvelopeConfig> for Envelope {
    fn from(e: EnvelopeConfig) -> Self {
        match e {
            EnvelopeConfig::Constant => Envelope::Constant,
            EnvelopeConfig::ExponentialDecay { rate } => Envelope::ExponentialDecay { rate },
            EnvelopeConfig::RampOff { t_off } => Envelope::RampOff { t_off },
        }
    }
}

/// Seeded smooth force: a random oscillating part of norm `amplitude` plus a
/// random mean profile of norm `mean_amplitude`, times the envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingConfig {
    /// Default 1.0.
    pub amplitude: f64,
    /// Default 0.0.
    pub mean_amplitude: f64,
    /// Default 1.
    pub seed: u64,
    /// Default 4.
    pub kmax: usize,
    /// Default exponential decay at rate 1.
    pub envelope: EnvelopeConfig,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig {
            amplitude: 1.0,
            mean_amplitude: 0.0,
            seed: 1,
            kmax: 4,
            envelope: EnvelopeConfig::ExponentialDecay { rate: 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwinConfig {
    /// Default 1e-6.
    pub perturbation: f64,
    /// Default 0.
    pub seed: u64,
    /// Largest allowed `distance / perturbation`. Default 100.
    pub max_growth: f64,
}

impl Default for TwinConfig {
    fn default() -> Self {
        TwinConfig { perturbation: 1e-6, seed: 0, max_growth: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymptoticsConfig {
    /// Bound on `||u~|| + ||v||` at the end. Default 1e-6.
    pub threshold: f64,
    /// Constant of the mean-profile Cauchy check. Default 10.
    pub cauchy_constant: f64,
    /// Allowed drift of the total mean momentum. Default 1e-9.
    pub momentum_tolerance: f64,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        AsymptoticsConfig { threshold: 1e-6, cauchy_constant: 10.0, momentum_tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorsConfig {
    /// Check the four a priori bounds. Default true.
    pub bounds: bool,
    /// Relative slack of the bound margins. Default 1e-8.
    pub bound_tolerance: f64,
    /// Largest allowed `|energy_residual|`. Default none (logged only).
    pub budget_tolerance: Option<f64>,
    /// Perturbed twin run. Default none.
    pub twin: Option<TwinConfig>,
    /// Convergence checks for long unforced runs. Default none.
    pub asymptotics: Option<AsymptoticsConfig>,
    /// Scenario-specific checks: exact decay ratio (taylor_green),
    /// exponential-decay fit (shear_stability), H2 plateau (forced_h2).
    /// Default true.
    pub scenario_checks: bool,
    /// Relative tolerance of the taylor_green decay ratio. Default 1e-5.
    pub decay_tolerance: f64,
    /// Smallest accepted r^2 of the shear_stability fit. Default 0.999.
    pub min_r_squared: f64,
}

impl Default for MonitorsConfig {
    fn default() -> Self {
        MonitorsConfig {
            bounds: true,
            bound_tolerance: 1e-8,
            budget_tolerance: None,
            twin: None,
            asymptotics: None,
            scenario_checks: true,
            decay_tolerance: 1e-5,
            min_r_squared: 0.999,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Default `"run"`. Overridden by `HVNS_OUTPUT_DIR`.
    pub run_dir: PathBuf,
    /// Snapshot cadence in steps. Default none.
    pub snapshot_every: Option<usize>,
    /// Diagnostics cadence in steps. Default 1.
    pub diagnostics_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { run_dir: PathBuf::from("run"), snapshot_every: None, diagnostics_every: 1 }
    }
}

/// A complete, validated simulation run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub stepper: StepperSection,
    #[serde(default)]
    pub initial: InitialConfig,
    /// Default none, except forced_h2 which defaults to `ForcingConfig::default()`.
    #[serde(default)]
    pub forcing: Option<ForcingConfig>,
    #[serde(default)]
    pub monitors: MonitorsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// A config with every default for `scenario`.
    pub fn new(scenario: Scenario) -> Self {
        let mut cfg = RunConfig {
            scenario,
            grid: GridConfig::default(),
            stepper: StepperSection::default(),
            initial: InitialConfig::default(),
            forcing: None,
            monitors: MonitorsConfig::default(),
            output: OutputConfig::default(),
        };
        cfg.fill_scenario_defaults();
        cfg
    }

    fn fill_scenario_defaults(&mut self) {
        if self.scenario == Scenario::ForcedH2 && self.forcing.is_none() {
            self.forcing = Some(ForcingConfig::default());
        }
    }

    pub fn grid(&self) -> Result<SpectralGrid, String> {
        self.grid.build()
    }

    pub fn stepper_config(&self) -> StepperConfig {
        StepperConfig {
            dt: match self.stepper.dt {
                DtSetting::Fixed(dt) => TimeStep::Fixed(dt),
                DtSetting::Auto(_) => TimeStep::Auto,
            },
            cfl: self.stepper.cfl,
            dt_max: self.stepper.dt_max,
            t_end: self.stepper.t_end,
            snapshot_every: self.output.snapshot_every,
            diagnostics_every: self.output.diagnostics_every,
        }
    }

    /// Every violated invariant, each message naming its key.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let grid = self.grid.build();
        if self.grid.nx < 4 || !self.grid.nx.is_multiple_of(2) {
            errs.push(format!("grid.nx must be even and at least 4, got {}", self.grid.nx));
        }
        if self.grid.ny < 2 {
            errs.push(format!("grid.ny must be at least 2, got {}", self.grid.ny));
        }
        if let Err(e) = self.grid.dealias_fraction() {
            errs.push(e);
        }
        errs.extend(self.stepper_config().validate().into_iter().map(|e| prefix_key(&e)));

        let band = grid.as_ref().map(|g| g.max_band()).ok();
        let check_band = |errs: &mut Vec<String>, key: &str, k: usize| {
            if k == 0 {
                errs.push(format!("{key} must be at least 1"));
            } else if let Some(limit) = band.filter(|l| k > *l) {
                errs.push(format!("{key} = {k} exceeds the dealiased band limit {limit} of the grid"));
            }
        };
        let positive = |errs: &mut Vec<String>, key: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{key} must be positive and finite, got {v}"));
            }
        };
        let finite = |errs: &mut Vec<String>, key: &str, v: f64| {
            if !v.is_finite() {
                errs.push(format!("{key} must be finite, got {v}"));
            }
        };

        let init = &self.initial;
        match self.scenario {
            Scenario::TaylorGreen => {
                finite(&mut errs, "initial.amplitude", init.amplitude);
                if band == Some(0) {
                    errs.push("grid too small to hold the (1, 1) mode".into());
                }
            }
            Scenario::PureShear => finite(&mut errs, "initial.shear", init.shear),
            Scenario::FreeDecay => {
                positive(&mut errs, "initial.amplitude", init.amplitude);
                check_band(&mut errs, "initial.kmax", init.kmax);
            }
            Scenario::ShearStability => {
                finite(&mut errs, "initial.shear", init.shear);
                positive(&mut errs, "initial.perturbation", init.perturbation);
                check_band(&mut errs, "initial.kmax", init.kmax);
            }
            Scenario::ForcedH2 => {
                positive(&mut errs, "initial.amplitude", init.amplitude);
                check_band(&mut errs, "initial.kmax", init.kmax);
            }
            Scenario::Custom => match &init.snapshot {
                None => errs.push("initial.snapshot is required for the custom scenario".into()),
                Some(p) => match snapshot::read_header(p) {
                    Err(e) => errs.push(format!("initial.snapshot {}: {e}", p.display())),
                    Ok(h) if (h.nx as usize, h.ny as usize) != (self.grid.nx, self.grid.ny) => errs.push(format!(
                        "initial.snapshot {} is {}x{}, grid is {}x{}",
                        p.display(),
                        h.nx,
                        h.ny,
                        self.grid.nx,
                        self.grid.ny
                    )),
                    Ok(_) => {}
                },
            },
        }

        match (&self.forcing, self.scenario) {
            (Some(_), Scenario::FreeDecay | Scenario::ShearStability) => {
                errs.push(format!("forcing must be absent for the {} scenario", self.scenario))
            }
            (None, Scenario::ForcedH2) => errs.push("forcing is required for the forced_h2 scenario".into()),
            (Some(f), _) => {
                finite(&mut errs, "forcing.amplitude", f.amplitude);
                finite(&mut errs, "forcing.mean_amplitude", f.mean_amplitude);
                check_band(&mut errs, "forcing.kmax", f.kmax);
                if let Err(e) = Envelope::from(f.envelope).validate() {
                    errs.push(format!("forcing.envelope: {e}"));
                }
                if self.scenario == Scenario::ForcedH2 {
                    if f.mean_amplitude != 0.0 {
                        errs.push("forcing.mean_amplitude must be 0 for forced_h2 (zero mean horizontal force)".into());
                    }
                    if !matches!(f.envelope, EnvelopeConfig::ExponentialDecay { rate } if rate > 0.0) {
                        errs.push("forcing.envelope must be exponential_decay with rate > 0 for forced_h2".into());
                    }
                }
            }
            (None, _) => {}
        }

        let m = &self.monitors;
        positive(&mut errs, "monitors.bound_tolerance", m.bound_tolerance);
        positive(&mut errs, "monitors.decay_tolerance", m.decay_tolerance);
        if !(0.0..=1.0).contains(&m.min_r_squared) {
            errs.push(format!("monitors.min_r_squared must lie in [0, 1], got {}", m.min_r_squared));
        }
        if let Some(b) = m.budget_tolerance {
            positive(&mut errs, "monitors.budget_tolerance", b);
        }
        if let Some(t) = &m.twin {
            positive(&mut errs, "monitors.twin.perturbation", t.perturbation);
            positive(&mut errs, "monitors.twin.max_growth", t.max_growth);
        }
        if let Some(a) = &m.asymptotics {
            positive(&mut errs, "monitors.asymptotics.threshold", a.threshold);
            positive(&mut errs, "monitors.asymptotics.cauchy_constant", a.cauchy_constant);
            positive(&mut errs, "monitors.asymptotics.momentum_tolerance", a.momentum_tolerance);
        }
        if self.output.run_dir.as_os_str().is_empty() {
            errs.push("output.run_dir must not be empty".into());
        }
        errs
    }
}

/// Maps the stepper's field names onto config keys.
fn prefix_key(msg: &str) -> String {
    const OUTPUT: [&str; 2] = ["snapshot_every", "diagnostics_every"];
    if OUTPUT.iter().any(|k| msg.starts_with(k)) {
        format!("output.{msg}")
    } else {
        format!("stepper.{msg}")
    }
}

/// Search strategy of one audit entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    #[default]
    MonteCarlo,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditEntry {
    pub inequality: String,
    /// Trials (Monte Carlo) or iterations (adversarial). Default 1000.
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    /// Default 8.
    #[serde(default = "default_kmax")]
    pub kmax: usize,
    /// Default 0.
    #[serde(default)]
    pub seed: u64,
    /// Default `"monte_carlo"`.
    #[serde(default)]
    pub search: SearchKind,
}

fn default_trials() -> usize {
    1000
}

fn default_kmax() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub audits: Vec<AuditEntry>,
    #[serde(default = "default_audit_dir")]
    pub run_dir: PathBuf,
}

fn default_audit_dir() -> PathBuf {
    PathBuf::from("audit")
}

impl AuditConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.audits.is_empty() {
            errs.push("audits must list at least one entry".into());
        }
        for (i, a) in self.audits.iter().enumerate() {
            if a.inequality.parse::<InequalityId>().is_err() {
                errs.push(format!("audits[{i}].inequality: unknown inequality {:?}", a.inequality));
            }
            if a.n_trials == 0 {
                errs.push(format!("audits[{i}].n_trials must be at least 1"));
            }
            if a.kmax == 0 {
                errs.push(format!("audits[{i}].kmax must be at least 1"));
            }
        }
        if self.run_dir.as_os_str().is_empty() {
            errs.push("run_dir must not be empty".into());
        }
        errs
    }
}

fn parse_document<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Parse {
            path: path.to_path_buf(),
            line: inner.line(),
            column: inner.column(),
            key,
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        key: ".".into(),
        message: e.to_string(),
    })?;
    Ok(value)
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

/// Parses and validates run configuration text; `origin` names it in errors.
pub fn parse_config_str(origin: &Path, text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = parse_document(origin, text)?;
    cfg.fill_scenario_defaults();
    let errs = cfg.validate();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(errs))
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    parse_config_str(path, &read(path)?)
}

/// Pretty JSON with every field present.
pub fn emit_config(cfg: &RunConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

pub fn parse_audit_config(path: &Path) -> Result<AuditConfig, ConfigError> {
    let cfg: AuditConfig = parse_document(path, &read(path)?)?;
    let errs = cfg.validate();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(errs))
    }
}

pub fn emit_audit_config(cfg: &AuditConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}
