//! Run manifest written next to the outputs of a solve.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SimConfig,
    /// The resolved configuration as TOML, parseable by `parse_config`.
    pub config_toml: String,
    pub code_version: String,
    pub start_time: String,
    pub end_time: String,
    pub blowup: bool,
    #[serde(default)]
    pub blowup_reason: Option<String>,
    #[serde(default)]
    pub blowup_time: Option<f64>,
    /// Checkpoint this run resumed from.
    #[serde(default)]
    pub resumed_from: Option<PathBuf>,
    #[serde(default)]
    pub l2_pass: Option<bool>,
    #[serde(default)]
    pub h1_pass: Option<bool>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    /// Writes `path` via a temporary sibling and a rename.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(format!("manifest serialization: {e}")))?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}
