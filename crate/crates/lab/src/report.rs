//! Report envelopes and output directories.
//!
//! A run produces `report.json`, optional CSV tables and binary arrays, all of
//! them pure functions of the configuration. Wall-clock data goes to `meta.json`.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, Kind};
use crate::error::Result;
use crate::io::write_file;

pub const LAB_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Artifact {
            name: name.into(),
            bytes,
        }
    }
}

#[derive(Debug, Serialize)]
struct Versions {
    #[serde(rename = "parabolic-core")]
    core: &'static str,
    #[serde(rename = "parabolic-lab")]
    lab: &'static str,
}

#[derive(Debug, Serialize)]
struct Envelope<'a> {
    kind: &'static str,
    config_hash: String,
    seed: u64,
    versions: Versions,
    /// Canonical TOML of the configuration.
    config: String,
    /// Set when an acceptance experiment has failing criteria.
    failure: Option<&'a str>,
    files: Vec<&'a str>,
    result: &'a Value,
}

/// Everything a run writes, kept in memory until [`RunOutput::write`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub kind: Kind,
    pub config_hash: String,
    /// `report.json` first, then tables and arrays.
    pub files: Vec<Artifact>,
    pub failure: Option<String>,
    /// Non-reproducible side data such as per-criterion timings.
    pub timings: Value,
    pub elapsed: Duration,
}

impl RunOutput {
    pub fn new(
        cfg: &ExperimentConfig,
        result: &Value,
        extra: Vec<Artifact>,
        failure: Option<String>,
    ) -> Self {
        let hash = cfg.hash();
        let names: Vec<&str> = extra.iter().map(|a| a.name.as_str()).collect();
        let env = Envelope {
            kind: cfg.experiment.kind().name(),
            config_hash: hash.clone(),
            seed: cfg.seed,
            versions: Versions {
                core: parabolic_core::VERSION,
                lab: LAB_VERSION,
            },
            config: cfg.canonical(),
            failure: failure.as_deref(),
            files: names,
            result,
        };
        let mut report = serde_json::to_vec_pretty(&env).expect("report serializes");
        report.push(b'\n');
        let mut files = vec![Artifact::new("report.json", report)];
        files.extend(extra);
        RunOutput {
            kind: cfg.experiment.kind(),
            config_hash: hash,
            files,
            failure,
            timings: Value::Null,
            elapsed: Duration::ZERO,
        }
    }

    pub fn file(&self, name: &str) -> Option<&Artifact> {
        self.files.iter().find(|a| a.name == name)
    }

    /// `<kind>-<first 12 hex digits of the config hash>`.
    pub fn dir_name(&self) -> String {
        format!("{}-{}", self.kind.name(), &self.config_hash[..12])
    }

    /// Writes all files plus `meta.json` below `root`; returns the run directory.
    pub fn write(&self, root: &Path, threads: usize) -> Result<PathBuf> {
        let dir = root.join(self.dir_name());
        for a in &self.files {
            write_file(&dir.join(&a.name), &a.bytes)?;
        }
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default();
        let meta = serde_json::json!({
            "finished_unix_seconds": now.as_secs_f64(),
            "elapsed_seconds": self.elapsed.as_secs_f64(),
            "threads": threads,
            "timings": self.timings,
        });
        write_file(
            &dir.join("meta.json"),
            &serde_json::to_vec_pretty(&meta).expect("meta serializes"),
        )?;
        Ok(dir)
    }
}

/// Pretty JSON of any serializable value, newline terminated.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("value serializes");
    v.push(b'\n');
    v
}
