//! Deterministic output files and the run manifest.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Digest of one emitted artifact.
#[derive(Debug, Clone, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

/// Record of a run: re-invoking the tool with the recorded subcommand
/// and config reproduces byte-identical artifacts.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config: serde_json::Value,
    pub rng_name: &'static str,
    pub rng_seed: u64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writer that collects digests for the manifest as it goes.
pub struct OutDir {
    dir: PathBuf,
    outputs: Vec<OutputDigest>,
}

impl OutDir {
    pub fn create(dir: &Path) -> std::io::Result<OutDir> {
        fs::create_dir_all(dir)?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.outputs.push(OutputDigest {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable value");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Emit `manifest.json` last, containing every prior digest.
    pub fn finish(
        mut self,
        subcommand: &str,
        config: serde_json::Value,
        rng_seed: u64,
    ) -> std::io::Result<Vec<OutputDigest>> {
        let manifest = RunManifest {
            tool: "galmem",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            config,
            rng_name: galmem::rng::RNG_NAME,
            rng_seed,
            outputs: self.outputs.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), &text)?;
        self.outputs.push(OutputDigest {
            file: "manifest.json".to_string(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(self.outputs)
    }
}

/// Worker cap: `GALMEM_THREADS` if set, else available parallelism.
pub fn worker_count() -> usize {
    match std::env::var("GALMEM_THREADS") {
        Ok(v) => v.parse().unwrap_or(1).max(1),
        Err(_) => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    }
}
