//! Run manifests: enough to re-run a command and check its inputs are
//! unchanged.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::formats::{parse_json, to_json_pretty};

pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const TOOL: &str = "persal";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Effective arguments after the program name, with defaults that depend
    /// on the environment (such as the current time) filled in.
    pub args: Vec<String>,
    /// Directory relative paths in `args` are resolved against.
    pub cwd: PathBuf,
    /// Resolved settings: thresholds, weights, seeds, resolutions, mapping
    /// and preference vector.
    pub config: serde_json::Value,
    /// SHA-256 of every input file, keyed by path as given.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let m: RunManifest = parse_json(&bytes, path)?;
        if m.tool != TOOL {
            return Err(CliError::invalid(format!("{}: not a {TOOL} manifest", path.display())));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        fs::write(path, to_json_pretty(self)).map_err(|e| CliError::io(path, e))
    }

    /// Paths of inputs whose current contents differ from the recorded
    /// digests (missing files included).
    pub fn changed_inputs(&self) -> Vec<String> {
        self.inputs
            .iter()
            .filter(|(path, digest)| {
                let p = self.cwd.join(path);
                fs::read(p).map(|b| &sha256_hex(&b) != *digest).unwrap_or(true)
            })
            .map(|(p, _)| p.clone())
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
