use std::path::Path;

use serde::Deserialize;

use eqv_core::oracle::{DEFAULT_POINTS, DEFAULT_SEED, DEFAULT_TOLERANCE};

/// Oracle settings. Read from the `[oracle]` table of a TOML file.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub seed: u64,
    pub tol: f64,
    pub points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            seed: DEFAULT_SEED,
            tol: DEFAULT_TOLERANCE,
            points: DEFAULT_POINTS,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    oracle: OracleConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Toml { path: String, source: toml::de::Error },
}

pub fn load(path: &Path) -> Result<OracleConfig, ConfigError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: name.clone(),
        source,
    })?;
    let file: ConfigFile = toml::from_str(&text).map_err(|source| ConfigError::Toml { path: name, source })?;
    Ok(file.oracle)
}
