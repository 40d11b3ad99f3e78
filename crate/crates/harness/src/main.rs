use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hvns::config::{parse_audit_config, parse_config, ConfigError};
use hvns::run::{resolve_output_dir, run_in, MANIFEST_FILE};
use hvns::sweep::{expand, run_sweep, SweepParam};
use hvns::{audit, report, ExitStatus};

/// Horizontal-viscosity channel-flow solver harness.
///
/// Exit codes: 0 success, 1 usage or configuration error, 2 monitor failure
/// or CFL violation or audit violation, 3 non-finite state, 4 I/O error.
/// HVNS_OUTPUT_DIR overrides the output directory of `run`, `audit` and `sweep`.
#[derive(Parser)]
#[command(name = "hvns", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scenario described by a run config.
    Run { config: PathBuf },
    /// Run the inequality audits listed in an audit config.
    Audit { config: PathBuf },
    /// Summarize a finished run directory.
    Report { run_dir: PathBuf },
    /// Run a grid of configs over dotted keys, e.g. --param initial.perturbation=1e-3,1e-2.
    Sweep {
        config: PathBuf,
        #[arg(long = "param", required = true)]
        params: Vec<SweepParam>,
    },
}

fn config_failure(e: ConfigError) -> ExitStatus {
    eprintln!("{e}");
    match e {
        ConfigError::Io { .. } => ExitStatus::Io,
        _ => ExitStatus::Usage,
    }
}

fn execute(cmd: Command) -> ExitStatus {
    match cmd {
        Command::Run { config } => {
            let cfg = match parse_config(&config) {
                Ok(c) => c,
                Err(e) => return config_failure(e),
            };
            let dir = resolve_output_dir(&cfg.output.run_dir);
            let out = run_in(&cfg, &dir);
            if let Some(m) = &out.message {
                eprintln!("{m}");
            }
            if let Some(man) = &out.manifest {
                for c in man.checks.iter().filter(|c| !c.passed) {
                    eprintln!("FAIL {}: {}", c.name, c.detail);
                }
                println!("{}: {:?} (see {})", dir.display(), man.status, dir.join(MANIFEST_FILE).display());
            }
            out.exit
        }
        Command::Audit { config } => {
            let cfg = match parse_audit_config(&config) {
                Ok(c) => c,
                Err(e) => return config_failure(e),
            };
            let dir = resolve_output_dir(&cfg.run_dir);
            let out = audit::run_audit_in(&cfg, &dir);
            print!("{}", out.table);
            if let Some(m) = &out.message {
                eprintln!("{m}");
            }
            out.exit
        }
        Command::Report { run_dir } => match report::report(&run_dir) {
            Ok(text) => {
                print!("{text}");
                ExitStatus::Success
            }
            Err(e) => {
                eprintln!("{e}");
                match e {
                    report::ReportError::MissingArtifact(_) => ExitStatus::Io,
                    report::ReportError::Malformed { .. } => ExitStatus::Io,
                }
            }
        },
        Command::Sweep { config, params } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(source) => return config_failure(ConfigError::Io { path: config, source }),
            };
            let base_cfg = match hvns::config::parse_config_str(&config, &text) {
                Ok(c) => c,
                Err(e) => return config_failure(e),
            };
            let base = resolve_output_dir(&base_cfg.output.run_dir);
            let members = match expand(&config, &text, &params, &base) {
                Ok(m) => m,
                Err(e) => return config_failure(e),
            };
            let out = run_sweep(&members, &params, &base);
            for (dir, exit) in &out.members {
                println!("{} exit {}", dir.display(), exit.code());
            }
            out.exit
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ExitStatus::Usage.code() as u8 } else { 0 });
        }
    };
    ExitCode::from(execute(cli.command).code() as u8)
}
