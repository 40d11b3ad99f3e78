//! The `audit` command: runs a list of inequality audits and writes
//! `audit.csv` plus a plain-text table.

use std::fmt::Write;
use std::fs;
use std::path::Path;

use hvns_core::audit::{adversarial_ratio_search, audit, AuditReport, InequalityId};

use crate::config::{AuditConfig, SearchKind};
use crate::run::{format_f64, write_text};
use crate::ExitStatus;

pub const AUDIT_CSV: &str = "audit.csv";
pub const AUDIT_TABLE: &str = "audit.txt";
pub const AUDIT_COLUMNS: [&str; 7] =
    ["inequality_id", "n_trials", "kmax", "max_ratio", "violations", "fitted_constant", "argmax_seed"];

#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub exit: ExitStatus,
    pub reports: Vec<AuditReport>,
    pub table: String,
    pub message: Option<String>,
}

pub fn run_entries(cfg: &AuditConfig) -> Result<Vec<AuditReport>, String> {
    cfg.audits
        .iter()
        .map(|a| {
            let id: InequalityId = a.inequality.parse().map_err(|e| format!("{e}"))?;
            match a.search {
                SearchKind::MonteCarlo => audit(id, a.n_trials, a.kmax, a.seed),
                SearchKind::Adversarial => adversarial_ratio_search(id, a.kmax, a.n_trials, a.seed),
            }
            .map_err(|e| format!("{id}: {e}"))
        })
        .collect()
}

pub fn csv_text(reports: &[AuditReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(AUDIT_COLUMNS).expect("in-memory write");
    for r in reports {
        w.write_record([
            r.inequality_id.as_str().to_string(),
            r.n_trials.to_string(),
            r.kmax.to_string(),
            format_f64(r.max_ratio),
            r.violations.to_string(),
            format_f64(r.fitted_constant),
            r.argmax_seed.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

pub fn table_text(reports: &[AuditReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<24} {:>9} {:>5} {:>22} {:>10} {:>12}  verdict",
        "inequality", "trials", "kmax", "max ratio", "violations", "argmax seed"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<24} {:>9} {:>5} {:>22.15e} {:>10} {:>12}  {}",
            r.inequality_id.as_str(),
            r.n_trials,
            r.kmax,
            r.max_ratio,
            r.violations,
            r.argmax_seed,
            if r.passed() { "ok" } else { "VIOLATED" }
        );
    }
    s
}

/// 0 when no report has a violation, 2 otherwise.
pub fn audit_exit(reports: &[AuditReport]) -> ExitStatus {
    if reports.iter().all(AuditReport::passed) {
        ExitStatus::Success
    } else {
        ExitStatus::MonitorFailure
    }
}

/// Runs every entry and writes the artifacts under `dir`.
pub fn run_audit_in(cfg: &AuditConfig, dir: &Path) -> AuditOutcome {
    let fail = |exit, message: String| AuditOutcome {
        exit,
        reports: Vec::new(),
        table: String::new(),
        message: Some(message),
    };
    let errs = cfg.validate();
    if !errs.is_empty() {
        return fail(ExitStatus::Usage, errs.join("; "));
    }
    let reports = match run_entries(cfg) {
        Ok(r) => r,
        Err(e) => return fail(ExitStatus::Usage, e),
    };
    let table = table_text(&reports);
    let written = fs::create_dir_all(dir)
        .and_then(|_| write_text(&dir.join(AUDIT_CSV), &csv_text(&reports)))
        .and_then(|_| write_text(&dir.join(AUDIT_TABLE), &table));
    if let Err(e) = written {
        return AuditOutcome { exit: ExitStatus::Io, reports, table, message: Some(format!("{}: {e}", dir.display())) };
    }
    AuditOutcome { exit: audit_exit(&reports), reports, table, message: None }
}
