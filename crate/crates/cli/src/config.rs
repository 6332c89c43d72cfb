// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use qho_control::navigator::{ContinuationConfig, DescentConfig, NavigationConfig, Task};
use serde::Deserialize;

use crate::CliError;

/// Run description read from a JSON file. Only `task` is required; the step
/// duration is always `T / M`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    #[serde(rename = "M", default)]
    pub pulses: Option<usize>,
    #[serde(default)]
    pub descent: DescentConfig,
    #[serde(default)]
    pub navigation: NavigationConfig,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub output: OutputPaths,
}

/// Output locations. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub protocol: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub collapsed: Option<PathBuf>,
    pub cloud: Option<PathBuf>,
    pub curves: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }

    fn validate(&self) -> Result<(), CliError> {
        let t = &self.task;
        if !(t.omega0 > 0.0 && t.omega_t > 0.0 && t.duration > 0.0) {
            return Err(CliError::Config(
                "task frequencies and duration must be positive".into(),
            ));
        }
        if self.pulses == Some(0) {
            return Err(CliError::Config("M must be at least 1".into()));
        }
        self.descent.validate()?;
        self.navigation.validate()?;
        self.continuation.validate()?;
        Ok(())
    }
}

/// Picks the command-line path, then the config path (resolved against
/// `base`), then `fallback`.
pub fn resolve(
    flag: Option<PathBuf>,
    configured: Option<&PathBuf>,
    base: &Path,
    fallback: &str,
) -> PathBuf {
    match (flag, configured) {
        (Some(p), _) => p,
        (None, Some(p)) if p.is_relative() => base.join(p),
        (None, Some(p)) => p.clone(),
        (None, None) => PathBuf::from(fallback),
    }
}
