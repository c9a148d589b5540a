use crate::args::{Command, Format};
use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// How the single seed fans out into per-trial streams.
pub const RNG_SCHEME: &str = "splitmix64 counter streams: trial t of a run with seed s uses \
derive(s, TRIAL, t); labels, structure, subsets and copies derive from the trial seed by tag; \
trials are folded in fixed batches of 256 so results do not depend on the worker count";

/// Everything needed to rerun a command and check its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub params: Command,
    pub seed: u64,
    pub trials: u64,
    pub format: Option<Format>,
    pub workers: usize,
    pub rng: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn default_path(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let s = std::fs::read_to_string(path)?;
        serde_json::from_str(&s).map_err(|e| CliError::Manifest(format!("{}: {e}", path.display())))
    }
}
