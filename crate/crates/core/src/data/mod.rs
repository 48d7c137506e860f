//! Dataset ingestion, preprocessing, stratified splitting and seeding.
//!
//! Raw tables come in through [`load_csv`] as a [`RawDataset`] holding typed
//! columns. A [`PreprocessSpec`] fitted on a subset of rows turns a raw table
//! into a dense numeric [`Dataset`] (standardized numerics, one-hot
//! categoricals). Everything random takes an explicit 64-bit seed.

mod csv_io;
mod manifest;
mod preprocess;
pub mod seed;
mod split;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, load_csv_reader, LabelColumn};
pub use manifest::{DatasetManifest, ManifestEntry};
pub use preprocess::{apply_preprocess, fit_preprocess, ColumnTransform, PreprocessSpec};
pub use split::{sample_initial_labels, stratified_kfold, stratified_split, FoldSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl ColumnValues {
    pub fn len(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnValues::Numeric(_) => ColumnKind::Numeric,
            ColumnValues::Categorical(_) => ColumnKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn {
    pub name: String,
    pub values: ColumnValues,
}

/// A binary-labelled table before preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub name: String,
    pub columns: Vec<RawColumn>,
    /// Labels in {0, 1}.
    pub labels: Vec<u8>,
    /// Raw label strings for class 0 and class 1 (lexicographic order).
    pub class_names: [String; 2],
}

impl RawDataset {
    /// Checks column lengths, label range and that both classes occur.
    pub fn new(
        name: impl Into<String>,
        columns: Vec<RawColumn>,
        labels: Vec<u8>,
        class_names: [String; 2],
    ) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::domain(format!("dataset needs at least 2 rows, got {n}")));
        }
        for c in &columns {
            if c.values.len() != n {
                return Err(Error::domain(format!(
                    "column {} has {} values, expected {n}",
                    c.name,
                    c.values.len()
                )));
            }
            if let ColumnValues::Numeric(v) = &c.values {
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(Error::domain(format!(
                        "column {} has non-finite value at row {i}",
                        c.name
                    )));
                }
            }
        }
        check_binary_labels(&labels)?;
        Ok(Self {
            name: name.into(),
            columns,
            labels,
            class_names,
        })
    }

    /// Wraps an all-numeric matrix, naming columns `x0, x1, ...`.
    pub fn from_numeric(
        name: impl Into<String>,
        features: &Array2<f64>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::domain("feature rows and label count differ"));
        }
        let columns = features
            .columns()
            .into_iter()
            .enumerate()
            .map(|(j, col)| RawColumn {
                name: format!("x{j}"),
                values: ColumnValues::Numeric(col.to_vec()),
            })
            .collect();
        Self::new(name, columns, labels, ["0".to_string(), "1".to_string()])
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn numeric_count(&self) -> usize {
        self.columns
            .iter()
            .filter(|c| c.values.kind() == ColumnKind::Numeric)
            .count()
    }

    pub fn categorical_count(&self) -> usize {
        self.columns.len() - self.numeric_count()
    }

    /// Convenience: fit preprocessing on every row and apply it.
    pub fn preprocess_all(&self) -> Result<Dataset> {
        let rows: Vec<usize> = (0..self.n_rows()).collect();
        let spec = fit_preprocess(self, &rows)?;
        apply_preprocess(&spec, self)
    }
}

/// Encoding metadata for one original column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    /// Category order used by the one-hot block; empty for numeric columns.
    pub categories: Vec<String>,
}

impl ColumnMeta {
    pub fn width(&self) -> usize {
        match self.kind {
            ColumnKind::Numeric => 1,
            ColumnKind::Categorical => self.categories.len(),
        }
    }
}

/// A dense, preprocessed, binary-labelled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub column_meta: Vec<ColumnMeta>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Array2<f64>,
        labels: Vec<u8>,
        column_meta: Vec<ColumnMeta>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::domain(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite feature value"));
        }
        check_binary_labels(&labels)?;
        Ok(Self {
            name: name.into(),
            features,
            labels,
            column_meta,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        class_counts(&self.labels)
    }
}

pub(crate) fn class_counts(labels: &[u8]) -> [usize; 2] {
    let ones = labels.iter().filter(|&&y| y == 1).count();
    [labels.len() - ones, ones]
}

fn check_binary_labels(labels: &[u8]) -> Result<()> {
    if labels.len() < 2 {
        return Err(Error::domain("need at least 2 rows"));
    }
    if let Some(bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::domain(format!("label {bad} outside {{0, 1}}")));
    }
    let [c0, c1] = class_counts(labels);
    if c0 == 0 || c1 == 0 {
        return Err(Error::domain("labels must contain both classes"));
    }
    Ok(())
}
