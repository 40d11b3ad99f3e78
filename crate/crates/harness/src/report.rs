//! The `report` command: a text summary of a finished run built only from
//! its manifest and `diagnostics.csv`.

use std::f64::consts::PI;
use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use hvns_core::diagnostics::fit_exponential_decay;
use thiserror::Error;

use crate::config::Scenario;
use crate::run::{h2_plateau_of, RunManifest, CSV_COLUMNS, DIAGNOSTICS_FILE, MANIFEST_FILE};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error("malformed artifact {path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

/// Parsed `diagnostics.csv`: one column per header name.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsTable {
    columns: Vec<Vec<Option<f64>>>,
}

impl DiagnosticsTable {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| e.to_string())?;
        if header.iter().ne(CSV_COLUMNS) {
            return Err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()));
        }
        let mut columns = vec![Vec::new(); CSV_COLUMNS.len()];
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            for (col, field) in columns.iter_mut().zip(rec.iter()) {
                let v = if field.is_empty() {
                    None
                } else {
                    Some(field.parse::<f64>().map_err(|e| format!("row {}: {field:?}: {e}", i + 1))?)
                };
                col.push(v);
            }
        }
        Ok(DiagnosticsTable { columns })
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values of a named column; empty cells are skipped.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = CSV_COLUMNS.iter().position(|c| *c == name).unwrap_or_else(|| panic!("unknown column {name}"));
        self.columns[i].iter().flatten().copied().collect()
    }

    fn series(&self, name: &str) -> Vec<(f64, f64)> {
        let i = CSV_COLUMNS.iter().position(|c| *c == name).unwrap_or_else(|| panic!("unknown column {name}"));
        self.columns[0].iter().zip(&self.columns[i]).filter_map(|(t, v)| Some(((*t)?, (*v)?))).collect()
    }
}

/// Reads the artifacts of `dir` and summarizes them.
pub fn report(dir: &Path) -> Result<String, ReportError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let csv_path = dir.join(DIAGNOSTICS_FILE);
    for p in [&manifest_path, &csv_path] {
        if !p.is_file() {
            return Err(ReportError::MissingArtifact(p.clone()));
        }
    }
    let malformed = |path: &Path, message: String| ReportError::Malformed { path: path.to_path_buf(), message };
    let manifest = RunManifest::read(dir).map_err(|e| malformed(&manifest_path, e.to_string()))?;
    let text = fs::read_to_string(&csv_path).map_err(|e| malformed(&csv_path, e.to_string()))?;
    let table = DiagnosticsTable::parse(&text).map_err(|e| malformed(&csv_path, e))?;
    Ok(summarize(&manifest, &table))
}

/// Rate `r` of `||g|| ~ exp(-r t)` fitted to a column, if enough samples.
fn norm_decay_rate(table: &DiagnosticsTable, column: &str) -> Option<(f64, f64)> {
    fit_exponential_decay(&table.series(column)).ok().map(|f| (0.5 * f.rate, f.r_squared))
}

/// Summary text. Depends only on its arguments.
pub fn summarize(manifest: &RunManifest, table: &DiagnosticsTable) -> String {
    let mut s = String::new();
    let cfg = &manifest.config;
    let _ = writeln!(s, "scenario      {}", cfg.scenario);
    let _ = writeln!(s, "grid          {}x{} (dealias {})", cfg.grid.nx, cfg.grid.ny, cfg.grid.dealias);
    let _ = writeln!(s, "status        {:?}", manifest.status);
    if let Some(t) = &manifest.termination {
        let _ = writeln!(s, "termination   {t:?}");
    }
    if let Some(n) = manifest.steps {
        let _ = writeln!(s, "steps         {n}");
    }
    let _ = writeln!(s, "records       {}", table.len());
    let _ = writeln!(s, "code version  {}", manifest.code_version);

    let _ = writeln!(s, "\nmonitors");
    if manifest.checks.is_empty() {
        let _ = writeln!(s, "  (none evaluated)");
    }
    for c in &manifest.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "  {verdict} {:<24} value {:e}  limit {:e}  {}", c.name, c.value, c.limit, c.detail);
    }

    let _ = writeln!(s, "\ndecay rates (fit of ln ||g||, per unit time)");
    for col in ["omega_l2", "osc_vorticity_l2", "v_l2"] {
        match norm_decay_rate(table, col) {
            Some((r, r2)) => {
                let _ = writeln!(s, "  {col:<18} {r:.9e}  r^2 {r2:.6}");
            }
            None => {
                let _ = writeln!(s, "  {col:<18} n/a");
            }
        }
    }
    if cfg.scenario == Scenario::TaylorGreen {
        let t = table.column("t");
        let w = table.column("omega_l2");
        if let (Some(t0), Some(t1), Some(w0), Some(w1)) = (t.first(), t.last(), w.first(), w.last()) {
            let analytic = 4.0 * PI * PI;
            if t1 > t0 && *w0 > 0.0 && *w1 > 0.0 {
                let measured = (w0 / w1).ln() / (t1 - t0);
                let _ = writeln!(
                    s,
                    "  taylor_green omega decay rate: measured {measured:.12e}, analytic {analytic:.12e}, relative error {:.3e}",
                    (measured / analytic - 1.0).abs()
                );
            }
        }
    }
    if cfg.scenario == Scenario::ForcedH2 {
        let p = h2_plateau_of(&table.series("h2_norm"));
        let _ = writeln!(
            s,
            "  h2 history: supremum {:e} at t = {} (midpoint {}), final-third max {:e}",
            p.peak, p.t_peak, p.t_half, p.tail_max
        );
    }

    let _ = writeln!(s, "\nbound margins (minimum over the run)");
    for col in ["e1_margin", "e2_margin", "v2_margin", "v20_margin"] {
        let m = table.column(col).into_iter().fold(f64::INFINITY, f64::min);
        let _ = writeln!(s, "  {col:<12} {m:e}");
    }
    let res = table.column("energy_residual").into_iter().map(f64::abs).fold(0.0, f64::max);
    let _ = writeln!(s, "  max |energy residual| {res:e}");
    let twin = table.column("twin_distance");
    if let Some(tw) = twin.iter().copied().reduce(f64::max) {
        let _ = writeln!(s, "  max twin distance {tw:e}");
    }

    let _ = writeln!(s, "\nfinal norms");
    if table.is_empty() {
        let _ = writeln!(s, "  (no records)");
    } else {
        for col in
            ["t", "energy", "enstrophy", "u_l2", "v_l2", "omega_l2", "h2_norm", "osc_vorticity_l2", "mean_profile_l2"]
        {
            let v = table.column(col).last().copied().unwrap_or(f64::NAN);
            let _ = writeln!(s, "  {col:<18} {v:e}");
        }
    }
    s
}
