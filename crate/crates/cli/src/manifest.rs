//! Output directories and the run manifest written next to every output.

use anyhow::{Context, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cwm_core::io::{to_json_pretty, write_atomic};
use cwm_core::rng::digest_hex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    /// File name relative to the directory that holds the manifest.
    pub path: String,
    pub sha256: String,
}

/// Enough to re-derive the outputs: what ran, on which bytes, with which seed.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub config_digest: String,
    /// Keyed by role (`episodes`, `data`, `checkpoint`, ...); names only, no directories.
    pub inputs: BTreeMap<String, FileDigest>,
    pub outputs: Vec<FileDigest>,
}

/// Collects inputs and outputs for one command and writes the manifest last.
pub struct OutDir {
    dir: PathBuf,
    command: String,
    inputs: BTreeMap<String, FileDigest>,
    outputs: Vec<FileDigest>,
}

impl OutDir {
    pub fn create(dir: &Path, command: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, role: &str, path: &Path, bytes: &[u8]) {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.inputs.insert(
            role.to_string(),
            FileDigest {
                path: name,
                sha256: digest_hex(bytes),
            },
        );
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: digest_hex(bytes),
        });
        Ok(path)
    }

    pub fn finish(self, seed: u64, config_digest: String) -> Result<PathBuf> {
        let manifest = RunManifest {
            schema_version: cwm_core::SCHEMA_VERSION,
            command: self.command.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_digest,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.command));
        write_atomic(&path, &to_json_pretty(&manifest)?)?;
        Ok(path)
    }
}
