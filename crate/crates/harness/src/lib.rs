//! Benchmark runner and command-line front end for `vi-core`.

pub mod bench;
pub mod cli;
pub mod config;
pub mod plot;

use std::fmt;

pub use bench::{run_benchmark, BenchOptions, BenchmarkOutput};
pub use config::{load_config, parse_config, RunConfig};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "VITOOL_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HarnessError {
    /// Malformed configuration text (syntax, unknown key, wrong type).
    Config(String),
    /// Well-formed configuration that fails validation; every violation is listed.
    Validation(Vec<String>),
    Io(String),
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 1 for configuration problems, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Validation(_) => 1,
            Self::Io(_) | Self::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Validation(v) => {
                writeln!(f, "invalid configuration ({} problem(s)):", v.len())?;
                for m in v {
                    writeln!(f, "  - {m}")?;
                }
                Ok(())
            }
            Self::Io(m) => write!(f, "i/o error: {m}"),
            Self::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for HarnessError {}
