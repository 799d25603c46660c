//! Run manifest written next to every set of report artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(role: &str, path: &Path) -> Result<Self> {
        Ok(Self {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: file_sha256(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub dataset: String,
    pub view: String,
    pub window: String,
    pub metric: String,
    pub direction: String,
    pub timezone: String,
    /// Arguments that reproduce this run (output directory omitted).
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    /// File name relative to the bundle directory.
    pub name: String,
    pub kind: String,
    pub view: String,
    pub window: String,
    pub direction: Option<String>,
    pub metric: Option<String>,
    pub sha256: String,
}

/// Collects artifacts as they are written into one output directory.
#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub metadata: RunMetadata,
    pub artifacts: Vec<Artifact>,
    #[serde(skip)]
    dir: PathBuf,
}

pub struct ArtifactTags<'a> {
    pub kind: &'a str,
    pub window: String,
    pub direction: Option<&'a str>,
    pub metric: Option<&'a str>,
}

impl ReportBundle {
    pub const MANIFEST: &'static str = "bundle.json";

    pub fn new(dir: &Path, metadata: RunMetadata) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            metadata,
            artifacts: Vec::new(),
            dir: dir.to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `contents` to `name` inside the bundle and records it.
    pub fn add(&mut self, name: &str, contents: &str, tags: ArtifactTags<'_>) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(Artifact {
            name: name.to_string(),
            kind: tags.kind.to_string(),
            view: self.metadata.view.clone(),
            window: tags.window,
            direction: tags.direction.map(str::to_string),
            metric: tags.metric.map(str::to_string),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    pub fn manifest_json(&self) -> Result<String> {
        let mut artifacts = self.artifacts.clone();
        artifacts.sort_by(|a, b| a.name.cmp(&b.name));
        let value = serde_json::json!({
            "metadata": self.metadata,
            "artifacts": artifacts,
        });
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }

    /// Writes `bundle.json` and returns its path.
    pub fn finish(&self) -> Result<PathBuf> {
        let path = self.dir.join(Self::MANIFEST);
        std::fs::write(&path, self.manifest_json()?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
