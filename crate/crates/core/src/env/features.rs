use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Classifier scores `P(Y=0|x)` on the reserved set, sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn from_scores(mut scores: Vec<f64>) -> Self {
        scores.sort_by(|a, b| b.total_cmp(a));
        StateVector(scores)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-candidate description fed to the Q-network alongside the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionFeatures {
    /// `P(Y=0|x)` under the current classifier.
    pub score: f64,
    /// Mean cosine distance to the labelled set.
    pub mean_dist_labelled: f64,
    /// Mean cosine distance to the unlabelled pool.
    pub mean_dist_unlabelled: f64,
}

impl ActionFeatures {
    pub fn to_array(self) -> [f64; 3] {
        [self.score, self.mean_dist_labelled, self.mean_dist_unlabelled]
    }
}

/// Row-normalized copy of a feature matrix for cosine distances.
///
/// A zero row has cosine 0 against everything, so its distance is 1.
#[derive(Debug, Clone)]
pub(crate) struct CosineTable {
    unit: Array2<f64>,
    zero: Vec<bool>,
}

impl CosineTable {
    pub fn new(features: &Array2<f64>) -> Self {
        let mut unit = features.as_standard_layout().to_owned();
        let mut zero = vec![false; unit.nrows()];
        for (i, mut row) in unit.rows_mut().into_iter().enumerate() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|v| v / norm);
            } else {
                zero[i] = true;
            }
        }
        Self { unit, zero }
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        if self.zero[i] || self.zero[j] {
            return 1.0;
        }
        let a = self.unit.row(i);
        let b = self.unit.row(j);
        let (a, b) = (a.as_slice().expect("standard"), b.as_slice().expect("standard"));
        let cos: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        (1.0 - cos).clamp(0.0, 2.0)
    }
}

/// Running sums of cosine distances from each pool row to `L` and to `U`.
#[derive(Debug, Clone)]
pub(crate) struct DensityCache {
    table: CosineTable,
    sum_labelled: Vec<f64>,
    sum_unlabelled: Vec<f64>,
}

impl DensityCache {
    pub fn new(features: &Array2<f64>, labelled: &[usize], unlabelled: &[usize]) -> Self {
        let table = CosineTable::new(features);
        let n = features.nrows();
        let mut sum_labelled = vec![0.0; n];
        let mut sum_unlabelled = vec![0.0; n];
        for &i in unlabelled {
            sum_labelled[i] = labelled.iter().map(|&j| table.dist(i, j)).sum();
            sum_unlabelled[i] = unlabelled.iter().map(|&j| table.dist(i, j)).sum();
        }
        Self {
            table,
            sum_labelled,
            sum_unlabelled,
        }
    }

    /// Accounts for `moved` leaving `U` for `L`; `remaining` is the new `U`.
    pub fn move_to_labelled(&mut self, moved: usize, remaining: &[usize]) {
        for &i in remaining {
            let d = self.table.dist(i, moved);
            self.sum_labelled[i] += d;
            self.sum_unlabelled[i] -= d;
        }
    }

    pub fn means(&self, i: usize, n_labelled: usize, n_unlabelled: usize) -> (f64, f64) {
        let gl = (self.sum_labelled[i] / n_labelled as f64).clamp(0.0, 2.0);
        let gu = (self.sum_unlabelled[i] / n_unlabelled as f64).clamp(0.0, 2.0);
        (gl, gu)
    }
}

/// Direct evaluation of the mean cosine distance from row `i` to `set`.
pub fn mean_cosine_distance(features: &Array2<f64>, i: usize, set: &[usize]) -> f64 {
    let xi = features.row(i);
    let ni = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let total: f64 = set
        .iter()
        .map(|&j| {
            let xj = features.row(j);
            let nj = xj.iter().map(|v| v * v).sum::<f64>().sqrt();
            if ni == 0.0 || nj == 0.0 {
                1.0
            } else {
                (1.0 - xi.dot(&xj) / (ni * nj)).clamp(0.0, 2.0)
            }
        })
        .sum();
    total / set.len() as f64
}
