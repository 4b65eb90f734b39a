use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

/// Provenance embedded in every report. Wall-clock timings are recorded
/// only when asked for, so default reports are byte-reproducible.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub timings_seconds: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: &[&Path], config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            config,
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timings_seconds: BTreeMap::new(),
        }
    }

    pub fn timing(&mut self, phase: &str, seconds: f64) {
        self.timings_seconds.insert(phase.to_string(), seconds);
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    manifest: &'a RunManifest,
    report: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, manifest: &RunManifest, report: &T) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(&Envelope { manifest, report })?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
}
