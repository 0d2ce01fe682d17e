//! Artifact emission. Files are staged in memory, written through a
//! temporary file in the target directory and renamed into place, so a
//! failed run never leaves a partial file behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self { name: name.into(), bytes }
    }
}

#[derive(Debug, Serialize)]
struct ManifestEntry<'a> {
    name: &'a str,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_sha256: &'a str,
    seed: u64,
    files: Vec<ManifestEntry<'a>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Writes `bytes` to `path` by rename from a sibling temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

/// Writes every artifact and then `manifest.json` with their checksums,
/// the config hash and the seed. Returns the written paths.
pub fn emit(dir: &Path, command: &str, config_hash: &str, seed: u64, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::with_capacity(artifacts.len() + 1);
    for a in artifacts {
        let p = dir.join(&a.name);
        write_atomic(&p, &a.bytes)?;
        written.push(p);
    }
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: config_hash,
        seed,
        files: artifacts
            .iter()
            .map(|a| ManifestEntry { name: &a.name, bytes: a.bytes.len(), sha256: sha256_hex(&a.bytes) })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    let p = dir.join(MANIFEST);
    write_atomic(&p, &bytes)?;
    written.push(p);
    Ok(written)
}
