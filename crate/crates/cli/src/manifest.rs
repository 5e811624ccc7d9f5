//! Run manifest and staged artifact writes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";
const STAGING_NAME: &str = ".pudsim-staging";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFile {
    /// Relative to the output directory, with `/` separators.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub format: String,
    /// SHA-256 of the resolved configuration as TOML.
    pub config_sha256: String,
    pub files: Vec<ManifestFile>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(subcommand: &str, config: &RunConfig, format: &str) -> Self {
        Self {
            tool: "pudsim".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            seed: config.effective_seed(),
            format: format.into(),
            config_sha256: sha256_hex(config.to_toml_string().as_bytes()),
            files: Vec::new(),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::runtime(format!("{}: {e}", path.display()))
}

/// A scratch directory inside the output directory.
pub(crate) struct Staging {
    out: PathBuf,
    dir: PathBuf,
    created_out: bool,
}

impl Staging {
    pub(crate) fn create(out: &Path) -> Result<Self, CliError> {
        let created_out = !out.exists();
        fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
        let dir = out.join(STAGING_NAME);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        fs::create_dir(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Self {
            out: out.to_path_buf(),
            dir,
            created_out,
        })
    }

    pub(crate) fn path(&self) -> &Path {
        &self.dir
    }

    pub(crate) fn discard(self) {
        let _ = fs::remove_dir_all(&self.dir);
        if self.created_out {
            let _ = fs::remove_dir(&self.out);
        }
    }

    /// Move every staged file into place and write the manifest.
    pub(crate) fn commit(self, mut manifest: Manifest) -> Result<Manifest, CliError> {
        let mut files = Vec::new();
        collect(&self.dir, &mut files).map_err(|e| io_err(&self.dir, e))?;
        files.sort();
        for rel in &files {
            let from = self.dir.join(rel);
            let to = self.out.join(rel);
            let bytes = fs::read(&from).map_err(|e| io_err(&from, e))?;
            manifest.files.push(ManifestFile {
                path: rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/"),
                sha256: sha256_hex(&bytes),
            });
            if let Some(parent) = to.parent() {
                fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
            }
            fs::rename(&from, &to).map_err(|e| io_err(&to, e))?;
        }
        fs::remove_dir_all(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        let path = self.out.join(MANIFEST_NAME);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifests serialize");
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(manifest)
    }
}

fn collect(root: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut stack = vec![PathBuf::new()];
    while let Some(rel) = stack.pop() {
        for entry in fs::read_dir(root.join(&rel))? {
            let entry = entry?;
            let child = rel.join(entry.file_name());
            if entry.file_type()?.is_dir() {
                stack.push(child);
            } else {
                out.push(child);
            }
        }
    }
    Ok(())
}
