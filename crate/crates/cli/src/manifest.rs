//! Run manifests: every invocation that writes files drops exactly one
//! `run_manifest.json` next to its outputs, carrying enough to reproduce
//! the run byte for byte (resolved config, seed, input digests) plus
//! wall-clock and peak-memory measurements for the record.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::time::Instant;

use kgsynth_core::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Fully resolved configuration: file values and flag overrides merged.
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub tool_version: String,
    pub wall_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub peak_rss_kb: Option<u64>,
}

pub struct ManifestBuilder {
    subcommand: String,
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<InputDigest>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        Ok(ManifestBuilder {
            subcommand: subcommand.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            inputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(self)
    }

    /// Stamp the timings and write `run_manifest.json` into `dir`.
    pub fn write(self, dir: &Path) -> Result<RunManifest> {
        let manifest = RunManifest {
            subcommand: self.subcommand,
            config: self.config,
            seed: self.seed,
            inputs: self.inputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_ms: self.started.elapsed().as_millis() as u64,
            peak_rss_kb: peak_rss_kb(),
        };
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(dir.join(RUN_MANIFEST_FILE), json + "\n")?;
        Ok(manifest)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// VmHWM in kB where the platform exposes it, None elsewhere.
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

/// Read a JSON config, accepting either the bare object or a previous
/// run manifest (whose `config` field is then extracted), so a manifest
/// doubles as a replay file.
pub fn load_config_value(path: &Path) -> Result<serde_json::Value> {
    let value: serde_json::Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    match &value {
        serde_json::Value::Object(map) if map.contains_key("subcommand") && map.contains_key("config") => {
            Ok(map["config"].clone())
        }
        serde_json::Value::Object(_) => Ok(value),
        _ => Err(Error::config(format!("{}: expected a JSON object", path.display()))),
    }
}
