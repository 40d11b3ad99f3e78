//! The `sweep` command: a grid of runs over dotted config keys, e.g.
//! `--param initial.perturbation=1e-3,1e-2 --param grid.nx=32,64`.

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::{parse_config_str, ConfigError, RunConfig};
use crate::run::{run_in, write_text};
use crate::ExitStatus;

pub const SWEEP_INDEX: &str = "sweep.csv";

/// One `--param key=v1,v2,...` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepParam {
    pub key: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, vals) = s.split_once('=').ok_or_else(|| format!("expected key=v1,v2,... in {s:?}"))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(format!("bad key {key:?}"));
        }
        let values: Vec<String> = vals.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(format!("no values for {key}"));
        }
        Ok(SweepParam { key: key.to_string(), values })
    }
}

/// A JSON literal when `raw` parses as one, otherwise a string.
fn literal(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(doc: &mut Value, key: &str, v: Value) -> Result<(), String> {
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| format!("{key}: {} is not an object", parts[..i].join(".")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), v);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("keys have at least one part")
}

/// Every combination of parameter values, first parameter slowest.
fn combinations(params: &[SweepParam]) -> Vec<Vec<&str>> {
    params.iter().fold(vec![Vec::new()], |acc, p| {
        acc.iter()
            .flat_map(|prefix| {
                p.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(v.as_str());
                    c
                })
            })
            .collect()
    })
}

fn member_dir(base: &Path, params: &[SweepParam], combo: &[&str]) -> PathBuf {
    let name: Vec<String> =
        params.iter().zip(combo).map(|(p, v)| format!("{}={}", p.key, v).replace(['/', '\\', ' '], "_")).collect();
    base.join(name.join(","))
}

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMember {
    pub config: RunConfig,
    pub dir: PathBuf,
    /// Raw value of each swept parameter, in parameter order.
    pub values: Vec<String>,
}

/// Expands the sweep into validated member configs with their run directories.
pub fn expand(origin: &Path, text: &str, params: &[SweepParam], base: &Path) -> Result<Vec<SweepMember>, ConfigError> {
    parse_config_str(origin, text)?;
    let doc: Value = serde_json::from_str(text).expect("parsed above");
    let mut out = Vec::new();
    let mut errs = Vec::new();
    for combo in combinations(params) {
        let mut d = doc.clone();
        for (p, v) in params.iter().zip(&combo) {
            if let Err(e) = set_path(&mut d, &p.key, literal(v)) {
                errs.push(e);
            }
        }
        let dir = member_dir(base, params, &combo);
        match parse_config_str(origin, &d.to_string()) {
            Ok(mut cfg) => {
                cfg.output.run_dir = dir.clone();
                out.push(SweepMember { config: cfg, dir, values: combo.iter().map(|v| v.to_string()).collect() });
            }
            Err(ConfigError::Validation(v)) => errs.extend(v.into_iter().map(|e| format!("{}: {e}", combo.join(",")))),
            Err(e) => errs.push(format!("{}: {e}", combo.join(","))),
        }
    }
    if errs.is_empty() {
        Ok(out)
    } else {
        Err(ConfigError::Validation(errs))
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub exit: ExitStatus,
    pub members: Vec<(PathBuf, ExitStatus)>,
}

/// Runs every member in order and writes `sweep.csv` under `base`.
pub fn run_sweep(members: &[SweepMember], params: &[SweepParam], base: &Path) -> SweepOutcome {
    let mut results = Vec::new();
    let mut rows = vec![{
        let mut h = vec!["run_dir".to_string()];
        h.extend(params.iter().map(|p| p.key.clone()));
        h.push("exit_code".into());
        h
    }];
    for m in members {
        let outcome = run_in(&m.config, &m.dir);
        let mut row = vec![m.dir.display().to_string()];
        row.extend(m.values.iter().cloned());
        row.push(outcome.exit.code().to_string());
        rows.push(row);
        results.push((m.dir.clone(), outcome.exit));
    }
    let mut exit = results.iter().map(|r| r.1).max().unwrap_or(ExitStatus::Success);
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.write_record(r).expect("in-memory write");
    }
    let text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 paths");
    if std::fs::create_dir_all(base).and_then(|_| write_text(&base.join(SWEEP_INDEX), &text)).is_err() {
        exit = ExitStatus::Io;
    }
    SweepOutcome { exit, members: results }
}
