use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shiptrack::association::SimilarityMetricKind;
use shiptrack::synth::ScenarioConfig;
use shiptrack::tracker::{Pipeline, TrackerConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of_bytes(path: &Path, bytes: &[u8]) -> Self {
        Self { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(bytes)) }
    }

    pub fn of_file(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::input(path, e))?;
        Ok(Self::of_bytes(path, &bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub pipelines: Vec<Pipeline>,
    pub metrics: Vec<SimilarityMetricKind>,
    pub seeds: Vec<u64>,
    pub iou_threshold: f64,
}

/// Everything needed to reproduce one run. Deliberately free of timestamps
/// and host details so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracker: Option<TrackerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<AblationGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iou_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            tracker: None,
            scenario: None,
            ablation: None,
            iou_threshold: None,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> CliResult {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::output(path, e))?;
        text.push('\n');
        write_file(path, text.as_bytes())
    }
}

/// `results.txt` → `results.manifest.json`, next to the output.
pub fn default_manifest_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    output.with_file_name(format!("{stem}.manifest.json"))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::output(path, e))
}
