//! Orchestration, report bundles and the `cwave` command line.

pub mod bundle;
pub mod config;
pub mod error;
pub mod plot;
pub mod report;

pub use bundle::{run_suite, write_bundle, Manifest, Outcome, SuiteRun};
pub use config::RunConfig;
pub use error::CliError;

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const ERROR: i32 = 2;
}
