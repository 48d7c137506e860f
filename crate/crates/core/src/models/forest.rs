use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::seed::{derive_seed, rng_from_seed, SeededRng};
use crate::error::{Error, Result};
use crate::models::{check_fit_inputs, predicted_class, ProbabilisticClassifier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub tree_count: usize,
    /// Minimum (bootstrap-weighted) sample count in a leaf.
    pub min_leaf: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            tree_count: 100,
            min_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Bootstrap-weighted class counts `[class0, class1]`.
    Leaf { counts: [f64; 2] },
}

/// A CART tree stored as a flat node list; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf_counts(&self, x: &[f64]) -> [f64; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { counts } => return *counts,
            }
        }
    }

    /// Class-0 proportion of the leaf reached by `x`.
    pub fn proba_row(&self, x: &[f64]) -> f64 {
        let [c0, c1] = self.leaf_counts(x);
        c0 / (c0 + c1)
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<DecisionTree>,
    /// Per tree, the drawn bootstrap as positions into the training rows.
    pub bootstrap_indices: Vec<Vec<usize>>,
    pub n_features: usize,
    pub n_train_rows: usize,
    pub max_features: usize,
    pub seed: u64,
}

impl ProbabilisticClassifier for RandomForestModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    /// Mean over trees of the leaf class-0 proportion (soft vote).
    fn proba_row(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.proba_row(x)).sum();
        (sum / self.trees.len() as f64).clamp(0.0, 1.0)
    }
}

/// Out-of-bag estimate: accuracy over covered rows and the covered fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OobEstimate {
    pub accuracy: f64,
    pub coverage: f64,
}

impl RandomForestModel {
    /// Majority vote, per row, over the trees whose bootstrap left that row out.
    ///
    /// `features`/`labels` must be exactly the training rows, in fitting order.
    /// Vote ties fall back to the mean OOB leaf proportion, then to class 0.
    pub fn oob_accuracy(&self, features: ArrayView2<'_, f64>, labels: &[u8]) -> Result<OobEstimate> {
        if features.nrows() != self.n_train_rows || labels.len() != self.n_train_rows {
            return Err(Error::domain(format!(
                "OOB needs the {} training rows, got {}",
                self.n_train_rows,
                features.nrows()
            )));
        }
        self.check_width(features.ncols())?;
        let n = self.n_train_rows;
        let in_bag: Vec<Vec<bool>> = self
            .bootstrap_indices
            .iter()
            .map(|b| {
                let mut mask = vec![false; n];
                for &i in b {
                    mask[i] = true;
                }
                mask
            })
            .collect();
        let mut covered = 0usize;
        let mut correct = 0usize;
        for r in 0..n {
            let x = features.row(r).to_vec();
            let mut votes = [0usize; 2];
            let mut p_sum = 0.0;
            let mut trees = 0usize;
            for (t, tree) in self.trees.iter().enumerate() {
                if in_bag[t][r] {
                    continue;
                }
                let p0 = tree.proba_row(&x);
                votes[predicted_class(p0) as usize] += 1;
                p_sum += p0;
                trees += 1;
            }
            if trees == 0 {
                continue;
            }
            covered += 1;
            let pred = match votes[0].cmp(&votes[1]) {
                std::cmp::Ordering::Greater => 0,
                std::cmp::Ordering::Less => 1,
                std::cmp::Ordering::Equal => predicted_class(p_sum / trees as f64),
            };
            if pred == labels[r] {
                correct += 1;
            }
        }
        if covered == 0 {
            return Err(Error::domain("no row is out-of-bag for any tree"));
        }
        Ok(OobEstimate {
            accuracy: correct as f64 / covered as f64,
            coverage: covered as f64 / n as f64,
        })
    }

    /// Builds trees on caller-supplied bootstraps (positions into `rows`).
    pub fn fit_with_bootstraps(
        features: &Array2<f64>,
        labels: &[u8],
        rows: &[usize],
        config: &ForestConfig,
        bootstraps: Vec<Vec<usize>>,
        seed: u64,
    ) -> Result<Self> {
        check_fit_inputs(features, labels, rows)?;
        if bootstraps.is_empty() {
            return Err(Error::domain("forest needs at least one tree"));
        }
        if bootstraps.iter().flatten().any(|&i| i >= rows.len()) || bootstraps.iter().any(Vec::is_empty) {
            return Err(Error::domain("bootstrap position out of range or empty"));
        }
        let d = features.ncols();
        let max_features = config
            .max_features
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d.max(1));
        let trees = bootstraps
            .par_iter()
            .enumerate()
            .map(|(t, boot)| {
                let mut rng = rng_from_seed(derive_seed(seed, &[t as u64, 1]));
                grow_tree(features, labels, rows, boot, config.min_leaf, max_features, &mut rng)
            })
            .collect();
        Ok(Self {
            trees,
            bootstrap_indices: bootstraps,
            n_features: d,
            n_train_rows: rows.len(),
            max_features,
            seed,
        })
    }
}

pub fn fit_random_forest(
    features: ArrayView2<'_, f64>,
    labels: &[u8],
    config: &ForestConfig,
    seed: u64,
) -> Result<RandomForestModel> {
    let x = features.as_standard_layout().to_owned();
    let rows: Vec<usize> = (0..x.nrows()).collect();
    fit_random_forest_rows(&x, labels, &rows, config, seed)
}

/// Fits on `rows` of `features`. Tree `t` draws its bootstrap and split
/// candidates from a stream seeded by `(seed, t)`, so the result does not
/// depend on thread scheduling.
pub fn fit_random_forest_rows(
    features: &Array2<f64>,
    labels: &[u8],
    rows: &[usize],
    config: &ForestConfig,
    seed: u64,
) -> Result<RandomForestModel> {
    check_fit_inputs(features, labels, rows)?;
    if config.tree_count == 0 {
        return Err(Error::domain("tree_count must be positive"));
    }
    let n = rows.len();
    let bootstraps = (0..config.tree_count)
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, &[t as u64, 0]));
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        })
        .collect();
    RandomForestModel::fit_with_bootstraps(features, labels, rows, config, bootstraps, seed)
}

struct Sample {
    row: usize,
    label: u8,
    weight: f64,
}

fn gini(c0: f64, c1: f64) -> f64 {
    let t = c0 + c1;
    if t <= 0.0 {
        return 0.0;
    }
    let p = c0 / t;
    2.0 * p * (1.0 - p)
}

fn grow_tree(
    features: &Array2<f64>,
    labels: &[u8],
    rows: &[usize],
    bootstrap: &[usize],
    min_leaf: usize,
    max_features: usize,
    rng: &mut SeededRng,
) -> DecisionTree {
    let mut weights = vec![0.0f64; rows.len()];
    for &i in bootstrap {
        weights[i] += 1.0;
    }
    let mut samples: Vec<Sample> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| Sample {
            row: rows[i],
            label: labels[rows[i]],
            weight: w,
        })
        .collect();
    let mut builder = TreeBuilder {
        features,
        min_leaf: min_leaf.max(1) as f64,
        max_features,
        nodes: Vec::new(),
        feature_order: (0..features.ncols()).collect(),
        scratch: Vec::new(),
    };
    builder.build(&mut samples[..], rng);
    DecisionTree { nodes: builder.nodes }
}

struct TreeBuilder<'a> {
    features: &'a Array2<f64>,
    min_leaf: f64,
    max_features: usize,
    nodes: Vec<TreeNode>,
    feature_order: Vec<usize>,
    scratch: Vec<(f64, u8, f64)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl TreeBuilder<'_> {
    fn build(&mut self, samples: &mut [Sample], rng: &mut SeededRng) -> usize {
        let mut counts = [0.0f64; 2];
        for s in samples.iter() {
            counts[s.label as usize] += s.weight;
        }
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { counts });
        let pure = counts[0] == 0.0 || counts[1] == 0.0;
        if pure || counts[0] + counts[1] < 2.0 * self.min_leaf {
            return id;
        }
        let Some(best) = self.find_split(samples, rng) else {
            return id;
        };
        let x = self.features;
        // partition in place: left block first
        let mut mid = 0;
        for i in 0..samples.len() {
            if x[[samples[i].row, best.feature]] <= best.threshold {
                samples.swap(i, mid);
                mid += 1;
            }
        }
        let (l, r) = samples.split_at_mut(mid);
        let left = self.build(l, rng);
        let right = self.build(r, rng);
        self.nodes[id] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Visits features in random order until `max_features` non-constant ones
    /// have been examined; returns the lowest weighted-Gini valid split.
    fn find_split(&mut self, samples: &[Sample], rng: &mut SeededRng) -> Option<BestSplit> {
        let x = self.features;
        let d = self.feature_order.len();
        let mut best: Option<BestSplit> = None;
        let mut examined = 0;
        let mut next = 0;
        while examined < self.max_features && next < d {
            let j = rng.gen_range(next..d);
            self.feature_order.swap(next, j);
            let f = self.feature_order[next];
            next += 1;

            self.scratch.clear();
            self.scratch
                .extend(samples.iter().map(|s| (x[[s.row, f]], s.label, s.weight)));
            self.scratch
                .sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
            let first = self.scratch[0].0;
            let last = self.scratch[self.scratch.len() - 1].0;
            if first == last {
                continue;
            }
            examined += 1;

            let mut total = [0.0f64; 2];
            for &(_, y, w) in &self.scratch {
                total[y as usize] += w;
            }
            let total_w = total[0] + total[1];
            let mut left = [0.0f64; 2];
            for i in 0..self.scratch.len() - 1 {
                let (v, y, w) = self.scratch[i];
                left[y as usize] += w;
                let v_next = self.scratch[i + 1].0;
                if v == v_next {
                    continue;
                }
                let lw = left[0] + left[1];
                let rw = total_w - lw;
                if lw < self.min_leaf || rw < self.min_leaf {
                    continue;
                }
                let impurity = lw * gini(left[0], left[1])
                    + rw * gini(total[0] - left[0], total[1] - left[1]);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = 0.5 * (v + v_next);
                    if threshold >= v_next {
                        threshold = v;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}
