//! CSV writers and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Fixed CSV layouts. The version is bumped whenever columns change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Velocity,
    Spectral,
    Field,
    Gap,
    Eigen,
}

impl Schema {
    pub fn header(self) -> &'static str {
        match self {
            Self::Velocity => "lambda,v",
            Self::Spectral => "n,coeff",
            Self::Field => "s,lambda,u",
            Self::Gap => "mu,gap",
            Self::Eigen => "n,lambda,alpha,omega,p,q,r",
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Self::Velocity => "velocity/1",
            Self::Spectral => "spectral/1",
            Self::Field => "field/1",
            Self::Gap => "gap/1",
            Self::Eigen => "eigen/1",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub schema: &'static str,
    pub bytes: usize,
    pub sha256: String,
}

/// Single writer for a run's output directory; remembers what it wrote.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    fn write_bytes(&mut self, name: &str, schema: &'static str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        let mut f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        f.write_all(bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.retain(|e| e.path != name);
        self.files.push(FileEntry {
            path: name.to_string(),
            schema,
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// Writes rows under the schema header. Floats use the shortest
    /// round-trip representation so identical inputs give identical bytes.
    pub fn write_csv<R: AsRef<[f64]>>(&mut self, name: &str, schema: Schema, rows: impl IntoIterator<Item = R>) -> Result<()> {
        let mut text = String::from(schema.header());
        text.push('\n');
        for row in rows {
            let cells: Vec<String> = row.as_ref().iter().map(|v| format_cell(*v)).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.write_bytes(name, schema.id(), text.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, schema: &'static str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, schema, text.as_bytes())
    }

    /// Writes `manifest.json`, which lists every other file and is not listed itself.
    pub fn write_manifest(&self, manifest: &Manifest) -> Result<PathBuf> {
        let path = self.root.join("manifest.json");
        let mut text = serde_json::to_string_pretty(manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

fn format_cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub status: String,
    pub config: serde_json::Value,
    pub diagnostics: serde_json::Value,
    pub timings_ms: BTreeMap<String, f64>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            status: "ok".to_string(),
            config: serde_json::to_value(config)?,
            diagnostics: serde_json::Value::Null,
            timings_ms: BTreeMap::new(),
            files: Vec::new(),
        })
    }
}
