use std::path::PathBuf;

use crate::config::ProbeName;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}", path = path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}:{line}:{column}: {message}", path = path.display())]
    Parse { path: PathBuf, line: usize, column: usize, message: String },

    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("probe {probe}: {source}")]
    Probe { probe: ProbeName, source: sdde_core::Error },

    #[error("probe {probe} is not configured: add a [probes.{probe}] block")]
    NotConfigured { probe: ProbeName },

    #[error("scenario: {0}")]
    Scenario(sdde_core::Error),

    #[error("cannot write {path}: {source}", path = path.display())]
    Output { path: PathBuf, source: std::io::Error },
}
