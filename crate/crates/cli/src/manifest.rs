//! Sidecar run manifests written next to every output as `<file>.manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sensevec::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub graph_fingerprint: String,
    pub config: BTreeMap<String, Value>,
    /// Wall-clock seconds per stage, in execution order.
    pub timings: Vec<(String, f64)>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, graph_fingerprint: &str) -> Self {
        RunManifest {
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            graph_fingerprint: graph_fingerprint.to_string(),
            config: BTreeMap::new(),
            timings: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.config.insert(key.to_string(), value);
    }

    /// Runs `f`, recording its duration under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings
            .push((stage.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    /// Writes the manifest beside each of `outputs`.
    pub fn write_for(&mut self, outputs: &[&Path]) -> Result<()> {
        self.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::from)?;
        for out in outputs {
            fs::write(sidecar(out), format!("{json}\n"))?;
        }
        Ok(())
    }

    /// Reads the manifest that accompanies `artifact`.
    pub fn read_for(artifact: &Path) -> Result<RunManifest> {
        let path = sidecar(artifact);
        let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Integrity(format!(
                "{} has no manifest ({}); cannot verify which graph produced it",
                artifact.display(),
                path.display()
            )),
            _ => e.into(),
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), 0, e.to_string()))
    }

    /// Refuses artifacts built from a different graph.
    pub fn require_fingerprint(&self, artifact: &Path, expected: &str) -> Result<()> {
        if self.graph_fingerprint == expected {
            Ok(())
        } else {
            Err(Error::Integrity(format!(
                "{} was built from graph {}, not {}",
                artifact.display(),
                self.graph_fingerprint,
                expected
            )))
        }
    }
}

pub fn sidecar(artifact: &Path) -> PathBuf {
    let mut name = artifact.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}
