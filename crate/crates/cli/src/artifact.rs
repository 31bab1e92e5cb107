use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA;

/// Every JSON output: payload plus the digests it was derived from.
#[derive(Debug, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub schema: u32,
    pub kind: String,
    pub tool_version: String,
    pub config_digest: String,
    /// File name → sha256 of the input artifact's bytes.
    pub inputs: BTreeMap<String, String>,
    pub data: T,
}

/// An artifact read from disk with the digest of its raw bytes.
pub struct Loaded<T> {
    pub path: PathBuf,
    pub digest: String,
    pub artifact: Artifact<T>,
}

impl<T> Loaded<T> {
    pub fn data(&self) -> &T {
        &self.artifact.data
    }
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<Loaded<T>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let artifact: Artifact<T> =
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {} as a {kind} artifact", path.display()))?;
    if artifact.kind != kind {
        bail!("{} holds a {} artifact, expected {kind}", path.display(), artifact.kind);
    }
    if artifact.schema != SCHEMA {
        bail!("{} has schema {}, expected {SCHEMA}", path.display(), artifact.schema);
    }
    Ok(Loaded { path: path.to_path_buf(), digest: polycontract::sha256_hex(&bytes), artifact })
}

pub struct Writer {
    pub dir: PathBuf,
    pub config_digest: String,
}

impl Writer {
    pub fn new(dir: &Path, config_digest: String) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), config_digest })
    }

    pub fn json<T: Serialize>(&self, name: &str, kind: &str, inputs: &[(&str, &str)], data: T) -> Result<PathBuf> {
        let artifact = Artifact {
            schema: SCHEMA,
            kind: kind.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: self.config_digest.clone(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            data,
        };
        let mut text = serde_json::to_string_pretty(&artifact)?;
        text.push('\n');
        self.text(name, &text)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}
