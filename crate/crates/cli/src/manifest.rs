use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Bumped whenever a CSV layout or the manifest shape changes.
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: u32,
    pub tool_version: String,
    pub experiment: String,
    pub seed: u64,
    /// Every config key with its resolved value.
    pub config: BTreeMap<String, String>,
    pub wall_time_seconds: f64,
    pub files: Vec<FileEntry>,
    /// Experiment-specific scalars (drifts, constants, witnesses).
    pub summary: BTreeMap<String, String>,
}
