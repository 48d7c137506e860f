use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{load_csv, LabelColumn, RawDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub path: PathBuf,
    pub label_column: LabelColumn,
}

/// A list of datasets, one `name, path, label_column` triple per line.
///
/// Blank lines and lines starting with `#` are ignored. Relative paths are
/// resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) {
                return Err(Error::Parse {
                    line: i as u64 + 1,
                    message: "expected `name, path, label_column`".into(),
                });
            }
            let path = PathBuf::from(parts[1]);
            let path = if path.is_relative() { base_dir.join(path) } else { path };
            entries.push(ManifestEntry {
                name: parts[0].to_string(),
                path,
                label_column: parts[2].parse().unwrap_or(LabelColumn::Index(0)),
            });
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Loads every listed dataset, renaming each to its manifest name.
    pub fn load_all(&self) -> Result<Vec<RawDataset>> {
        self.entries
            .iter()
            .map(|e| {
                let mut d = load_csv(&e.path, &e.label_column)?;
                d.name = e.name.clone();
                Ok(d)
            })
            .collect()
    }
}
