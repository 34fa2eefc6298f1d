//! Output directories and their run manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::RunSpec;
use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    /// Digest of the reproducible content; `None` for timing-only files.
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub spec: RunSpec,
    pub outputs: Vec<OutputRecord>,
    pub wall_time_ns: u128,
}

impl Manifest {
    pub fn load(dir_or_file: &Path) -> CliResult<Manifest> {
        let path = if dir_or_file.is_dir() {
            dir_or_file.join(MANIFEST)
        } else {
            dir_or_file.to_path_buf()
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Files whose digests differ from `other`'s.
    pub fn mismatches(&self, other: &Manifest) -> Vec<String> {
        let mut out = Vec::new();
        for rec in &self.outputs {
            match other.outputs.iter().find(|o| o.file == rec.file) {
                Some(o) if o.sha256 == rec.sha256 => {}
                _ => out.push(rec.file.clone()),
            }
        }
        for o in &other.outputs {
            if !self.outputs.iter().any(|r| r.file == o.file) {
                out.push(o.file.clone());
            }
        }
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writer that records every file it creates.
pub struct OutDir {
    path: PathBuf,
    outputs: Vec<OutputRecord>,
}

impl OutDir {
    pub fn create(path: &Path) -> CliResult<OutDir> {
        std::fs::create_dir_all(path)?;
        Ok(OutDir {
            path: path.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, name: &str, content: &str) -> CliResult<()> {
        let digest = sha256_hex(content.as_bytes());
        self.write_with_digest(name, content, Some(digest))
    }

    /// Writes `content` but digests only `reproducible`, the part that must
    /// not depend on timing.
    pub fn write_timed(
        &mut self,
        name: &str,
        content: &str,
        reproducible: Option<&str>,
    ) -> CliResult<()> {
        self.write_with_digest(
            name,
            content,
            reproducible.map(|r| sha256_hex(r.as_bytes())),
        )
    }

    fn write_with_digest(
        &mut self,
        name: &str,
        content: &str,
        sha256: Option<String>,
    ) -> CliResult<()> {
        std::fs::write(self.path.join(name), content)?;
        self.outputs.retain(|o| o.file != name);
        self.outputs.push(OutputRecord {
            file: name.to_string(),
            sha256,
        });
        Ok(())
    }

    pub fn finish(self, spec: RunSpec, wall_time_ns: u128) -> CliResult<Manifest> {
        let manifest = Manifest {
            command: spec.command().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: spec.seed(),
            spec,
            outputs: self.outputs,
            wall_time_ns,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(self.path.join(MANIFEST), text + "\n")?;
        Ok(manifest)
    }
}
