//! `manifest.json`: what produced a run directory and what it holds.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    seed: u64,
    inputs_hash: String,
    inputs: Vec<String>,
    outputs: Vec<FileEntry>,
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Hash over the effective config and the bytes of every input file, each
/// length-prefixed.
pub fn inputs_hash(effective_config: &str, inputs: &[PathBuf]) -> Result<String> {
    let mut h = Sha256::new();
    h.update((effective_config.len() as u64).to_le_bytes());
    h.update(effective_config.as_bytes());
    for p in inputs {
        let bytes = std::fs::read(p).with_context(|| format!("hashing {}", p.display()))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

/// Writes `dir/manifest.json` listing `outputs` (paths inside `dir`).
pub fn write_manifest(
    dir: &Path,
    command: &str,
    seed: u64,
    effective_config: &str,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<()> {
    let mut entries = outputs
        .iter()
        .map(|p| {
            let name = p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/");
            Ok(FileEntry { name, sha256: file_hash(p)? })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| a.name.cmp(&b.name));
    let manifest = Manifest {
        tool: "adagnn",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        seed,
        inputs_hash: inputs_hash(effective_config, inputs)?,
        inputs: inputs.iter().map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned()).collect(),
        outputs: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}
