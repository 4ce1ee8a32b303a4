//! Scenario runner behind the `purchase-timing` binary.

pub mod config;
pub mod presets;
pub mod run;

pub use config::{parse_config, Config, Scenario, ScenarioConfig};
pub use presets::{Preset, PRESETS};
pub use run::{run_file, run_text, RunOptions, RunReport, OUT_ENV};

use crate::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("solver failure: {0}")]
    Solver(Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::UnknownScenario(_) | CliError::UnknownPreset(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(msg) => CliError::Io(msg),
            other => CliError::Solver(other),
        }
    }
}

/// Run a preset by name.
pub fn run_preset(name: &str, opts: &RunOptions) -> Result<RunReport, CliError> {
    let preset = presets::find(name).ok_or_else(|| CliError::UnknownPreset(name.to_string()))?;
    let text = serde_json::to_string_pretty(&(preset.config)()).map_err(|e| CliError::Config(e.to_string()))?;
    run_text(&text, opts)
}
