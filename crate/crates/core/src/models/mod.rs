//! Probabilistic binary classifiers.
//!
//! Both models report scores as `P(Y = 0 | x)`; the class-1 probability is
//! always its complement.

mod forest;
mod logistic;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use forest::{
    fit_random_forest, fit_random_forest_rows, DecisionTree, ForestConfig, OobEstimate,
    RandomForestModel, TreeNode,
};
pub use logistic::{
    fit_logistic_regression, fit_logistic_regression_rows, logistic_objective, LogisticConfig,
    LogisticRegressionModel,
};

pub trait ProbabilisticClassifier {
    fn n_features(&self) -> usize;

    /// `P(Y = 0 | x)` for a single feature row of the right width.
    fn proba_row(&self, x: &[f64]) -> f64;

    /// `P(Y = 0 | x)` for every row.
    fn predict_proba(&self, features: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        self.check_width(features.ncols())?;
        Ok(features
            .rows()
            .into_iter()
            .map(|r| match r.as_slice() {
                Some(s) => self.proba_row(s),
                None => self.proba_row(&r.to_vec()),
            })
            .collect())
    }

    /// Scores for a subset of rows of `features`, in the order given.
    fn predict_proba_rows(&self, features: &Array2<f64>, rows: &[usize]) -> Result<Vec<f64>> {
        self.check_width(features.ncols())?;
        Ok(rows
            .iter()
            .map(|&r| {
                let row = features.row(r);
                match row.as_slice() {
                    Some(s) => self.proba_row(s),
                    None => self.proba_row(&row.to_vec()),
                }
            })
            .collect())
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.n_features() {
            return Err(Error::domain(format!(
                "model expects {} features, got {width}",
                self.n_features()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "lr")]
    Logistic,
    #[serde(rename = "rf")]
    Forest,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Logistic, ModelKind::Forest];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Logistic => "lr",
            ModelKind::Forest => "rf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr" | "logistic" => Ok(ModelKind::Logistic),
            "rf" | "forest" => Ok(ModelKind::Forest),
            other => Err(Error::domain(format!("unknown model {other:?} (expected lr or rf)"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub logistic: LogisticConfig,
    pub forest: ForestConfig,
}

/// A fitted model of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Logistic(LogisticRegressionModel),
    Forest(RandomForestModel),
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Logistic(_) => ModelKind::Logistic,
            Classifier::Forest(_) => ModelKind::Forest,
        }
    }
}

impl ProbabilisticClassifier for Classifier {
    fn n_features(&self) -> usize {
        match self {
            Classifier::Logistic(m) => m.n_features(),
            Classifier::Forest(m) => m.n_features(),
        }
    }

    fn proba_row(&self, x: &[f64]) -> f64 {
        match self {
            Classifier::Logistic(m) => m.proba_row(x),
            Classifier::Forest(m) => m.proba_row(x),
        }
    }
}

/// Fits a model of `kind` on the given rows of `features`.
pub fn fit_classifier(
    kind: ModelKind,
    config: &ModelConfig,
    features: &Array2<f64>,
    labels: &[u8],
    rows: &[usize],
    seed: u64,
) -> Result<Classifier> {
    Ok(match kind {
        ModelKind::Logistic => Classifier::Logistic(fit_logistic_regression_rows(
            features,
            labels,
            rows,
            &config.logistic,
        )?),
        ModelKind::Forest => Classifier::Forest(fit_random_forest_rows(
            features,
            labels,
            rows,
            &config.forest,
            seed,
        )?),
    })
}

/// Fraction of `rows` whose thresholded score (`P(Y=0) >= 0.5` means class 0) matches the label.
pub fn accuracy_on<C: ProbabilisticClassifier + ?Sized>(
    model: &C,
    features: &Array2<f64>,
    labels: &[u8],
    rows: &[usize],
) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::domain("accuracy over an empty row set"));
    }
    let scores = model.predict_proba_rows(features, rows)?;
    let correct = rows
        .iter()
        .zip(&scores)
        .filter(|(&r, &p0)| predicted_class(p0) == labels[r])
        .count();
    Ok(correct as f64 / rows.len() as f64)
}

pub(crate) fn predicted_class(p0: f64) -> u8 {
    u8::from(p0 < 0.5)
}

/// Shared precondition check for fitting.
pub(crate) fn check_fit_inputs(features: &Array2<f64>, labels: &[u8], rows: &[usize]) -> Result<()> {
    if labels.len() != features.nrows() {
        return Err(Error::domain("features and labels have different row counts"));
    }
    if rows.len() < 2 {
        return Err(Error::domain("fitting needs at least 2 rows"));
    }
    let mut seen = [false; 2];
    for &r in rows {
        if r >= labels.len() {
            return Err(Error::domain(format!("row {r} out of range")));
        }
        let y = labels[r];
        if y > 1 {
            return Err(Error::domain(format!("label {y} outside {{0, 1}}")));
        }
        seen[y as usize] = true;
        if features.row(r).iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite feature in row {r}")));
        }
    }
    if !(seen[0] && seen[1]) {
        return Err(Error::domain("fitting needs both classes present"));
    }
    Ok(())
}
