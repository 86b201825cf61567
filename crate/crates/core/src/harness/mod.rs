//! Configuration, run orchestration, CSV and snapshot output, and the
//! bundled verification suites behind the `isodyn` binary.

pub mod checks;
pub mod config;
pub mod maxwell;
pub mod plot;
pub mod simulate;

use std::fmt;
use std::path::PathBuf;

pub use checks::{run_checks, CheckReport, SuiteReport};
pub use config::{parse_config, ConfigErrors, RunConfig};
pub use simulate::run_simulate;

use crate::error::IsoError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SUITE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    /// Inputs that parse but cannot be used, such as modes at Nyquist.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Unusable non-config input, such as a CSV without the column.
    #[error("{0}")]
    Input(String),
    #[error("{}", runtime_message(*.step, .source, .last_good))]
    Runtime { step: usize, source: IsoError, last_good: Option<PathBuf> },
    #[error("io: {0}")]
    Io(String),
}

fn runtime_message(step: usize, source: &IsoError, last_good: &Option<PathBuf>) -> String {
    let mut s = format!("runtime failure at step {step}: {source}");
    match last_good {
        Some(p) => s.push_str(&format!("; last good state in {}", p.display())),
        None => s.push_str("; no snapshot could be written"),
    }
    s
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Precondition(_) | HarnessError::Input(_) => EXIT_CONFIG,
            HarnessError::Runtime { .. } | HarnessError::Io(_) => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub struct ThreadsError(String);

impl fmt::Display for ThreadsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ISODYN_THREADS: {}", self.0)
    }
}

/// Parses an ISODYN_THREADS value: a positive integer.
pub fn parse_threads(v: &str) -> Result<usize, ThreadsError> {
    match v.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(ThreadsError(format!("expected a positive integer, got '{v}'"))),
    }
}

/// Caps the worker pool at ISODYN_THREADS when set. Results do not depend
/// on the thread count.
pub fn init_threads() -> Result<Option<usize>, ThreadsError> {
    let Ok(v) = std::env::var("ISODYN_THREADS") else {
        return Ok(None);
    };
    let n = parse_threads(&v)?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| ThreadsError(e.to_string()))?;
    Ok(Some(n))
}
