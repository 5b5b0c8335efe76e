//! Dataset manifests: one `path<TAB>label` record per line.
//!
//! Relative paths are resolved against the manifest's own directory, so a
//! dataset directory can be moved as a whole.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub path: PathBuf,
    pub label: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub records: Vec<Record>,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (path, label) = line.split_once('\t').ok_or_else(|| {
                Error::Malformed(format!("manifest line {}: expected path<TAB>label", n + 1))
            })?;
            let path = Path::new(path);
            let path = if path.is_absolute() {
                path.to_path_buf()
            } else {
                base.join(path)
            };
            records.push(Record {
                path,
                label: label.to_string(),
            });
        }
        Ok(Self { records })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    /// Serializes records, writing paths relative to `base` when possible.
    pub fn to_text(&self, base: &Path) -> String {
        let mut out = String::new();
        for r in &self.records {
            let p = r.path.strip_prefix(base).unwrap_or(&r.path);
            out.push_str(&p.to_string_lossy());
            out.push('\t');
            out.push_str(&r.label);
            out.push('\n');
        }
        out
    }

    /// Distinct labels in sorted order; a label's position is its class id.
    pub fn class_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.records.iter().map(|r| r.label.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
