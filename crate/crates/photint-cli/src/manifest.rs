//! Run manifests: every invocation that writes outputs drops a
//! `manifest.toml` next to them with the fully resolved configuration, so
//! any CSV can be reproduced from its manifest alone. A manifest is itself
//! accepted wherever a config file is.

use crate::config::Config;
use anyhow::Context;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run: RunInfo,
    pub config: Config,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub version: String,
    pub subcommand: String,
    /// Config file the run started from; "defaults" when none was given.
    pub source: String,
    pub seed: u64,
    pub shots: f64,
}

/// Writes `manifest.toml` into `dir`, recording how `config` was reached.
pub fn write_manifest(
    dir: &Path,
    subcommand: &str,
    source: Option<&Path>,
    config: &Config,
) -> anyhow::Result<()> {
    let manifest = Manifest {
        run: RunInfo {
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            source: source.map_or_else(|| "defaults".to_string(), |p| p.display().to_string()),
            seed: config.run.seed,
            shots: config.run.shots,
        },
        config: config.clone(),
    };
    let text = toml::to_string_pretty(&manifest).context("cannot serialize run manifest")?;
    let path = dir.join("manifest.toml");
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
