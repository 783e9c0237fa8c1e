//! Exit codes and report files.

use std::path::Path;

use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

/// A failed run, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    /// Exit 1.
    #[error("{0}")]
    Usage(String),
    /// Exit 2.
    #[error("{0}")]
    Data(String),
    /// Exit 3.
    #[error("{0}")]
    Gate(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Gate(_) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<emodrift::Error> for Failure {
    fn from(e: emodrift::Error) -> Self {
        use emodrift::Error as E;
        match e {
            E::Config(_) | E::InvalidArgument(_) | E::BetaBelowMinimum(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

/// Every report file: tool identity, resolved configuration, payload.
#[derive(Serialize)]
pub struct Envelope<'a, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub report: R,
}

pub fn envelope<'a, R: Serialize>(command: &'static str, config: &'a RunConfig, report: R) -> Envelope<'a, R> {
    Envelope {
        tool: "emodrift",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        report,
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Data(e.to_string()))?;
    s.push('\n');
    write_text(path, &s)
}
