//! Atomic output files and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    fn of(name: &str, data: &[u8]) -> Self {
        FileDigest { name: name.to_string(), bytes: data.len() as u64, sha256: sha256_hex(data) }
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Inputs, outputs and settings of one command. Files are named without
/// their directory so that runs in different places compare equal.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// `SOURCE_DATE_EPOCH` when set.
    pub timestamp: Option<u64>,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, seed: Option<u64>, config: &C) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let canonical = serde_json::to_vec(&config)?;
        Ok(RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_sha256: sha256_hex(&canonical),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let data = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileDigest::of(&file_name(path), &data));
        Ok(())
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Output directory whose files appear atomically.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<FileDigest>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf(), written: Vec::new() })
    }

    /// Renders `name` in memory, then moves it into place via a temp file.
    pub fn write<F>(&mut self, name: &str, render: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut data = Vec::new();
        render(&mut data).with_context(|| format!("rendering {name}"))?;
        self.put(name, &data)?;
        self.written.push(FileDigest::of(name, &data));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)?;
            buf.push(b'\n');
            Ok(())
        })
    }

    fn put(&self, name: &str, data: &[u8]) -> Result<()> {
        let target = self.dir.join(name);
        let mut builder = tempfile::Builder::new();
        #[cfg(unix)]
        builder.permissions(std::os::unix::fs::PermissionsExt::from_mode(0o644));
        let mut tmp = builder.prefix(".vqcsim-").tempfile_in(&self.dir)?;
        tmp.write_all(data)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target).with_context(|| format!("writing {}", target.display()))?;
        Ok(())
    }

    /// Writes `manifest-<command>.json` listing everything written so far.
    pub fn finish(self, mut manifest: RunManifest) -> Result<PathBuf> {
        manifest.outputs = self.written.clone();
        let name = format!("manifest-{}.json", manifest.command);
        let mut data = serde_json::to_vec_pretty(&manifest)?;
        data.push(b'\n');
        self.put(&name, &data)?;
        Ok(self.dir.join(name))
    }
}
