//! Writing results and the run manifest that accompanies every output file.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use surfperc::table::Table;
use surfperc::CodeLayout;

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

/// Provenance record written next to an output as `<out>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub artifact_version: &'static str,
    pub command: String,
    pub master_seed: Option<u64>,
    pub threads: usize,
    /// Resolved settings after merging the config file and flags.
    pub config: serde_json::Value,
    /// SHA-256 of the JSON layout, keyed by distance.
    pub layout_sha256: BTreeMap<usize, String>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputFile>,
}

pub struct Run {
    pub command: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub distances: Vec<usize>,
    started: DateTime<Utc>,
}

impl Run {
    pub fn start(command: &str, seed: Option<u64>, config: impl Serialize) -> anyhow::Result<Self> {
        Ok(Run {
            command: command.to_string(),
            seed,
            config: serde_json::to_value(config)?,
            distances: Vec::new(),
            started: Utc::now(),
        })
    }

    pub fn with_distances(mut self, distances: &[usize]) -> Self {
        self.distances = distances.to_vec();
        self
    }

    pub fn write_table(self, table: &Table, out: Option<&Path>) -> anyhow::Result<()> {
        self.write_bytes(table.to_csv_string().into_bytes(), out)
    }

    pub fn write_json(self, value: &impl Serialize, out: Option<&Path>) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(text.into_bytes(), out)
    }

    fn write_bytes(self, bytes: Vec<u8>, out: Option<&Path>) -> anyhow::Result<()> {
        let Some(path) = out else {
            std::io::stdout().lock().write_all(&bytes)?;
            return Ok(());
        };
        std::fs::write(path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        let mut layout_sha256 = BTreeMap::new();
        for &d in &self.distances {
            let json = CodeLayout::build(d)?.to_json();
            layout_sha256.insert(d, hex::encode(Sha256::digest(json.as_bytes())));
        }
        let manifest = RunManifest {
            artifact_version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            master_seed: self.seed,
            threads: rayon::current_num_threads(),
            config: self.config,
            layout_sha256,
            started: self.started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            outputs: vec![OutputFile {
                path: path.to_path_buf(),
                sha256: hex::encode(Sha256::digest(&bytes)),
                bytes: bytes.len(),
            }],
        };
        let mpath = manifest_path(path);
        std::fs::write(&mpath, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", mpath.display()))?;
        log::info!("wrote {} and {}", path.display(), mpath.display());
        Ok(())
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
