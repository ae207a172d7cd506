use std::path::Path;

use mdf_core::error::read_file;
use mdf_core::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Content hash of an input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub role: String,
    /// File name only, so that manifests compare across directories.
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

impl Fingerprint {
    pub fn of(role: &str, path: &Path) -> Result<Self> {
        let data = read_file(path)?;
        Ok(Fingerprint {
            role: role.into(),
            file: path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            bytes: data.len(),
            sha256: hex::encode(Sha256::digest(&data)),
        })
    }
}

/// What was run, on which inputs, producing which files. No timestamps,
/// so identical runs write identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub datasets: Vec<Fingerprint>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub metrics: serde_json::Value,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join(MANIFEST_FILE), to_json(self)?)?;
        Ok(())
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}
