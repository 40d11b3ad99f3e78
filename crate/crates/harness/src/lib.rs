//! Command-line harness for the channel-flow solver: JSON run and audit
//! configurations, a scenario registry, run directories with a manifest,
//! a streamed `diagnostics.csv` and binary snapshots, and text reports.
//!
//! Exit codes of every command:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success: every enabled monitor passed |
//! | 1 | usage or configuration error |
//! | 2 | a monitor failed, a CFL violation stopped the run, or an audit found violations |
//! | 3 | numerical abort (non-finite state) |
//! | 4 | I/O error |
//!
//! The run directory named in a config is overridden by the
//! `HVNS_OUTPUT_DIR` environment variable.

pub mod audit;
pub mod config;
pub mod report;
pub mod run;
pub mod scenarios;
pub mod snapshot;
pub mod sweep;

/// Process exit status, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExitStatus {
    Success,
    Usage,
    MonitorFailure,
    NonFinite,
    Io,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Usage => 1,
            ExitStatus::MonitorFailure => 2,
            ExitStatus::NonFinite => 3,
            ExitStatus::Io => 4,
        }
    }
}
