use std::collections::BTreeSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, ColumnMeta, ColumnValues, Dataset, RawDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnTransform {
    /// `(x - mean) / sd` with population sd; constant columns use sd = 1.
    Standardize { mean: f64, sd: f64 },
    /// One 0/1 column per category, categories sorted; unseen values map to all zeros.
    OneHot { categories: Vec<String> },
}

/// Per-column transforms fitted on a subset of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub column_names: Vec<String>,
    pub transforms: Vec<ColumnTransform>,
}

impl PreprocessSpec {
    pub fn output_width(&self) -> usize {
        self.transforms
            .iter()
            .map(|t| match t {
                ColumnTransform::Standardize { .. } => 1,
                ColumnTransform::OneHot { categories } => categories.len(),
            })
            .sum()
    }
}

/// Fits standardization and one-hot maps using only `fit_rows`.
pub fn fit_preprocess(d: &RawDataset, fit_rows: &[usize]) -> Result<PreprocessSpec> {
    if fit_rows.is_empty() {
        return Err(Error::domain("fit_rows is empty"));
    }
    if let Some(&r) = fit_rows.iter().find(|&&r| r >= d.n_rows()) {
        return Err(Error::domain(format!("fit row {r} out of range")));
    }
    let transforms = d
        .columns
        .iter()
        .map(|c| match &c.values {
            ColumnValues::Numeric(v) => {
                let n = fit_rows.len() as f64;
                let mean = fit_rows.iter().map(|&r| v[r]).sum::<f64>() / n;
                let var = fit_rows.iter().map(|&r| (v[r] - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                let sd = if sd <= 1e-12 * mean.abs().max(1.0) { 1.0 } else { sd };
                ColumnTransform::Standardize { mean, sd }
            }
            ColumnValues::Categorical(v) => {
                let categories: BTreeSet<&String> = fit_rows.iter().map(|&r| &v[r]).collect();
                ColumnTransform::OneHot {
                    categories: categories.into_iter().cloned().collect(),
                }
            }
        })
        .collect();
    Ok(PreprocessSpec {
        column_names: d.columns.iter().map(|c| c.name.clone()).collect(),
        transforms,
    })
}

/// Applies a fitted spec to every row of `d`.
pub fn apply_preprocess(spec: &PreprocessSpec, d: &RawDataset) -> Result<Dataset> {
    if spec.transforms.len() != d.columns.len() {
        return Err(Error::domain(format!(
            "spec has {} columns, dataset has {}",
            spec.transforms.len(),
            d.columns.len()
        )));
    }
    let n = d.n_rows();
    let mut features = Array2::<f64>::zeros((n, spec.output_width()));
    let mut meta = Vec::with_capacity(d.columns.len());
    let mut offset = 0;
    for (col, t) in d.columns.iter().zip(&spec.transforms) {
        match (&col.values, t) {
            (ColumnValues::Numeric(v), ColumnTransform::Standardize { mean, sd }) => {
                for (r, x) in v.iter().enumerate() {
                    features[[r, offset]] = (x - mean) / sd;
                }
                meta.push(ColumnMeta {
                    name: col.name.clone(),
                    kind: ColumnKind::Numeric,
                    categories: Vec::new(),
                });
                offset += 1;
            }
            (ColumnValues::Categorical(v), ColumnTransform::OneHot { categories }) => {
                for (r, x) in v.iter().enumerate() {
                    if let Ok(k) = categories.binary_search(x) {
                        features[[r, offset + k]] = 1.0;
                    }
                }
                meta.push(ColumnMeta {
                    name: col.name.clone(),
                    kind: ColumnKind::Categorical,
                    categories: categories.clone(),
                });
                offset += categories.len();
            }
            _ => {
                return Err(Error::domain(format!(
                    "column {} kind does not match the fitted transform",
                    col.name
                )))
            }
        }
    }
    Dataset::new(d.name.clone(), features, d.labels.clone(), meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RawColumn;
    use proptest::prelude::*;

    fn raw(cols: Vec<RawColumn>, labels: Vec<u8>) -> RawDataset {
        RawDataset::new("t", cols, labels, ["0".into(), "1".into()]).unwrap()
    }

    fn num(name: &str, v: Vec<f64>) -> RawColumn {
        RawColumn {
            name: name.into(),
            values: ColumnValues::Numeric(v),
        }
    }

    fn cat(name: &str, v: &[&str]) -> RawColumn {
        RawColumn {
            name: name.into(),
            values: ColumnValues::Categorical(v.iter().map(|s| s.to_string()).collect()),
        }
    }

    #[test]
    fn two_point_standardization() {
        // mean 1, population sd 1
        let d = raw(vec![num("a", vec![0.0, 2.0])], vec![0, 1]);
        let out = d.preprocess_all().unwrap();
        assert_eq!(out.features.column(0).to_vec(), vec![-1.0, 1.0]);
    }

    #[test]
    fn one_hot_sorted_categories() {
        let d = raw(vec![cat("c", &["b", "a", "b"])], vec![0, 1, 0]);
        let out = d.preprocess_all().unwrap();
        assert_eq!(out.features.row(1).to_vec(), vec![1.0, 0.0]);
        assert_eq!(out.features.row(0).to_vec(), vec![0.0, 1.0]);
        assert_eq!(out.column_meta[0].categories, vec!["a", "b"]);
    }

    #[test]
    fn unseen_category_is_zero_block() {
        let d = raw(vec![cat("c", &["a", "b", "z"])], vec![0, 1, 0]);
        let spec = fit_preprocess(&d, &[0, 1]).unwrap();
        let out = apply_preprocess(&spec, &d).unwrap();
        assert_eq!(out.features.row(2).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn constant_column_sd_is_one() {
        let d = raw(vec![num("a", vec![3.0; 4])], vec![0, 1, 0, 1]);
        let spec = fit_preprocess(&d, &[0, 1, 2, 3]).unwrap();
        assert_eq!(spec.transforms[0], ColumnTransform::Standardize { mean: 3.0, sd: 1.0 });
    }

    #[test]
    fn empty_fit_rows_rejected() {
        let d = raw(vec![num("a", vec![0.0, 1.0])], vec![0, 1]);
        assert!(fit_preprocess(&d, &[]).is_err());
    }

    #[test]
    fn fit_on_subset_uses_only_subset_statistics() {
        let d = raw(vec![num("a", vec![1.0, 3.0, 100.0, -50.0])], vec![0, 1, 0, 1]);
        let spec = fit_preprocess(&d, &[0, 1]).unwrap();
        let out = apply_preprocess(&spec, &d).unwrap();
        let col = out.features.column(0).to_vec();
        assert_eq!(col, vec![-1.0, 1.0, 98.0, -52.0]);
    }

    proptest! {
        #[test]
        fn fitted_partition_is_standardized(
            values in prop::collection::vec(-1e3f64..1e3, 3..60),
            split in 2usize..60,
        ) {
            let n = values.len();
            let k = split.min(n);
            let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
            let d = raw(vec![num("a", values.clone())], labels);
            let fit: Vec<usize> = (0..k).collect();
            let spec = fit_preprocess(&d, &fit).unwrap();
            let out = apply_preprocess(&spec, &d).unwrap();
            let col: Vec<f64> = fit.iter().map(|&r| out.features[[r, 0]]).collect();
            let mean = col.iter().sum::<f64>() / k as f64;
            let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k as f64).sqrt();
            prop_assert!(mean.abs() < 1e-9);
            let constant = fit.iter().all(|&r| values[r] == values[fit[0]]);
            if !constant {
                prop_assert!((sd - 1.0).abs() < 1e-9);
            }
        }
    }
}
