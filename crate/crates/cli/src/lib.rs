//! Configuration, orchestration and artifact output for conewave runs.

pub mod config;
pub mod ladder;
pub mod output;
pub mod pipeline;

use std::fs;
use std::path::Path;

use thiserror::Error;

pub use config::RunConfig;
pub use ladder::{ladder, LadderReport};
pub use pipeline::{run, RunReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run aborted: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<conewave::Error> for CliError {
    fn from(e: conewave::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml(&text)
}

/// One verdict per check found in a report.json or convergence.json.
pub fn verify(path: &Path) -> Result<Vec<(String, bool)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (key, label) in [("checks", "name"), ("orders", "quantity")] {
        if let Some(items) = value.get(key).and_then(|v| v.as_array()) {
            for item in items {
                let name = item.get(label).and_then(|v| v.as_str()).unwrap_or("?").to_string();
                let pass = item.get("pass").and_then(|v| v.as_bool());
                out.push((name, pass == Some(true)));
            }
        }
    }
    if let Some(levels) = value.get("levels").and_then(|v| v.as_array()) {
        for l in levels {
            let k = l.get("level").and_then(|v| v.as_u64()).unwrap_or(0);
            out.push((format!("level_{k}"), l.get("pass").and_then(|v| v.as_bool()) == Some(true)));
        }
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("{} holds no checks", path.display())));
    }
    Ok(out)
}

/// Name, parameters and description of each initial-data family.
pub const FAMILIES: &[(&str, &str, &str)] = &[
    (
        "gaussian",
        "profile = monopole | z-tilt, amplitude, width, offset",
        "monopole: u0 = A exp(-|x - offset e_z|^2 / width^2); z-tilt: u0 = A (1 + z/2) exp(-|x|^2 / width^2); u1 = 0",
    ),
    (
        "cutoff-gaussian",
        "as gaussian, plus cutoff_radius",
        "the gaussian times a smooth radial cutoff: 0 for |x| <= cutoff_radius / 2, 1 for |x| >= cutoff_radius",
    ),
];
