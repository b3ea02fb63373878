//! Optional TOML configuration file. Precedence: command-line flags
//! beat config-file values beat built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use semtrace_core::{CoreError, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dimensions: Option<usize>,
    pub weighting: Option<String>,
    pub start: Option<usize>,
    pub end: Option<usize>,
    pub mode: Option<String>,
    pub checkpoint_every: Option<usize>,
    pub incremental_tolerance: Option<f64>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| {
            CoreError::format(None, format!("config file {}: {e}", path.display()))
        })
    }
}

/// flag value, else config value, else default
pub fn resolve<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
