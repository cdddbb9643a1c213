//! Output directory with a reproducibility manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const MANIFEST_FORMAT: &str = "specq-manifest";
pub const MANIFEST_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects artifacts of one command and writes them with `manifest.json`.
pub struct Run {
    dir: PathBuf,
    command: String,
    config: Value,
    seed: u64,
    outputs: Vec<(String, String)>,
}

impl Run {
    pub fn new(dir: &Path, command: &str, config: Value, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Run { dir: dir.to_path_buf(), command: command.to_string(), config, seed, outputs: Vec::new() })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn finish(self) -> Result<PathBuf> {
        let canonical = serde_json::to_string(&self.config)?;
        let outputs: Vec<Value> = self.outputs.iter().map(|(f, h)| json!({ "file": f, "sha256": h })).collect();
        let manifest = json!({
            "format": MANIFEST_FORMAT,
            "version": MANIFEST_VERSION,
            "specq_version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "config_sha256": sha256_hex(canonical.as_bytes()),
            "seed": self.seed,
            "outputs": outputs,
        });
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Reads an input file and records its hash in the config.
pub fn read_input(path: &Path) -> Result<(String, Value)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rec = json!({ "path": path.display().to_string(), "sha256": sha256_hex(text.as_bytes()) });
    Ok((text, rec))
}
