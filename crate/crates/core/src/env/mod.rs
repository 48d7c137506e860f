//! The active-learning episode engine.
//!
//! An [`EpisodeState`] owns the labelled set `L`, the candidate pool `U`, a
//! reserved scoring set `V`, the held-out rows used to measure quality and
//! the classifier fitted on `L`. [`EpisodeState::step`] labels one candidate,
//! refits, and reports the constant reward and whether the episode ended.

mod features;

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::seed::{derive_seed, rng_from_seed};
use crate::data::{
    apply_preprocess, fit_preprocess, sample_initial_labels, stratified_split, Dataset, RawDataset,
};
use crate::error::{Error, Result};
use crate::models::{
    accuracy_on, fit_classifier, Classifier, ModelConfig, ModelKind, ProbabilisticClassifier,
};

pub(crate) use features::DensityCache;
pub use features::{mean_cosine_distance, ActionFeatures, StateVector};

/// Size of the reserved scoring set.
pub const V_SIZE: usize = 30;

/// Reward paid on every transition.
pub const STEP_REWARD: f64 = -1.0;

/// Replaces test-set accuracy with a scripted quality sequence.
///
/// `curve(t)` is the quality after `t` labelling steps; `threshold` replaces
/// the fraction-of-full-data target. Used to check that selections never
/// depend on held-out rows.
#[derive(Clone)]
pub struct QualityOracle {
    pub threshold: f64,
    pub curve: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
}

impl fmt::Debug for QualityOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QualityOracle")
            .field("threshold", &self.threshold)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub model: ModelKind,
    pub model_config: ModelConfig,
    /// Stratified share of rows held out as the quality set `D'`.
    pub test_fraction: f64,
    pub v_size: usize,
    /// Target quality as a fraction of the full-training-data accuracy.
    pub quality_ratio: f64,
    /// Safety cap on steps; `None` means `|U_0|`.
    pub max_steps: Option<usize>,
    /// Larger datasets are stratified-subsampled to this many rows per episode.
    pub max_rows: Option<usize>,
    #[serde(skip)]
    pub quality_oracle: Option<QualityOracle>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Logistic,
            model_config: ModelConfig::default(),
            test_fraction: 1.0 / 3.0,
            v_size: V_SIZE,
            quality_ratio: 0.98,
            max_steps: None,
            max_rows: Some(1000),
            quality_oracle: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    QualityReached,
    PoolExhausted,
    StepCap,
}

impl fmt::Display for TerminalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminalReason::QualityReached => "quality_reached",
            TerminalReason::PoolExhausted => "pool_exhausted",
            TerminalReason::StepCap => "step_cap",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub terminal: Option<TerminalReason>,
}

/// Everything needed to start an episode on an already-split dataset.
#[derive(Clone)]
pub struct EpisodeSetup {
    pub data: Arc<Dataset>,
    pub initial: (usize, usize),
    /// Candidate pool, excluding `initial` and `v_set`.
    pub pool: Vec<usize>,
    pub v_set: Vec<usize>,
    pub test_rows: Vec<usize>,
    /// Quality at or above this ends the episode; use `f64::INFINITY` to disable.
    pub threshold: f64,
    pub max_steps: Option<usize>,
    pub model: ModelKind,
    pub model_config: ModelConfig,
    /// Seeds the classifier refit at each step.
    pub seed: u64,
    /// Maintain cosine-distance sums for action features.
    pub track_density: bool,
    pub quality_curve: Option<Arc<dyn Fn(usize) -> f64 + Send + Sync>>,
}

#[derive(Clone)]
pub struct EpisodeState {
    data: Arc<Dataset>,
    labelled: Vec<usize>,
    unlabelled: Vec<usize>,
    v_set: Vec<usize>,
    test_rows: Vec<usize>,
    classifier: Classifier,
    quality: f64,
    threshold: f64,
    step: usize,
    max_steps: usize,
    model: ModelKind,
    model_config: ModelConfig,
    seed: u64,
    density: Option<DensityCache>,
    quality_curve: Option<Arc<dyn Fn(usize) -> f64 + Send + Sync>>,
}

impl fmt::Debug for EpisodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EpisodeState")
            .field("dataset", &self.data.name)
            .field("labelled", &self.labelled)
            .field("unlabelled", &self.unlabelled.len())
            .field("v_set", &self.v_set)
            .field("quality", &self.quality)
            .field("threshold", &self.threshold)
            .field("step", &self.step)
            .finish_non_exhaustive()
    }
}

impl EpisodeState {
    pub fn from_setup(setup: EpisodeSetup) -> Result<Self> {
        let EpisodeSetup {
            data,
            initial,
            mut pool,
            v_set,
            test_rows,
            threshold,
            max_steps,
            model,
            model_config,
            seed,
            track_density,
            quality_curve,
        } = setup;
        let n = data.n_rows();
        let (a, b) = initial;
        if a == b || data.labels[a] == data.labels[b] {
            return Err(Error::domain("initial labels must be one row of each class"));
        }
        pool.sort_unstable();
        pool.dedup();
        let mut seen = vec![false; n];
        for &r in [a, b].iter().chain(&pool).chain(&v_set).chain(&test_rows) {
            if r >= n {
                return Err(Error::domain(format!("row {r} out of range")));
            }
            if seen[r] {
                return Err(Error::domain(format!(
                    "row {r} appears in more than one of L, U, V, test"
                )));
            }
            seen[r] = true;
        }
        if test_rows.is_empty() && quality_curve.is_none() {
            return Err(Error::domain("no held-out rows to measure quality"));
        }
        let labelled = vec![a, b];
        let density = track_density.then(|| DensityCache::new(&data.features, &labelled, &pool));
        let classifier = fit_classifier(
            model,
            &model_config,
            &data.features,
            &data.labels,
            &labelled,
            derive_seed(seed, &[0]),
        )?;
        let max_steps = max_steps.unwrap_or(pool.len());
        let mut state = Self {
            data,
            labelled,
            unlabelled: pool,
            v_set,
            test_rows,
            classifier,
            quality: 0.0,
            threshold,
            step: 0,
            max_steps,
            model,
            model_config,
            seed,
            density,
            quality_curve,
        };
        state.quality = state.measure_quality()?;
        Ok(state)
    }

    fn measure_quality(&self) -> Result<f64> {
        match &self.quality_curve {
            Some(curve) => Ok(curve(self.step)),
            None => accuracy_on(
                &self.classifier,
                &self.data.features,
                &self.data.labels,
                &self.test_rows,
            ),
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn labelled(&self) -> &[usize] {
        &self.labelled
    }

    /// Candidate rows in ascending order.
    pub fn unlabelled(&self) -> &[usize] {
        &self.unlabelled
    }

    pub fn v_set(&self) -> &[usize] {
        &self.v_set
    }

    pub fn test_rows(&self) -> &[usize] {
        &self.test_rows
    }

    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }

    pub fn quality(&self) -> f64 {
        self.quality
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    /// Whether the current state already satisfies a terminal condition.
    pub fn terminal_reason(&self) -> Option<TerminalReason> {
        if self.quality >= self.threshold {
            Some(TerminalReason::QualityReached)
        } else if self.unlabelled.is_empty() {
            Some(TerminalReason::PoolExhausted)
        } else if self.step >= self.max_steps {
            Some(TerminalReason::StepCap)
        } else {
            None
        }
    }

    /// Sorted classifier scores on `V`.
    pub fn compute_state(&self) -> Result<StateVector> {
        let scores =
            self.classifier
                .predict_proba_rows(&self.data.features, &self.v_set)?;
        Ok(StateVector::from_scores(scores))
    }

    /// Scores for the current candidates, in `unlabelled()` order.
    pub fn candidate_scores(&self) -> Result<Vec<f64>> {
        self.classifier
            .predict_proba_rows(&self.data.features, &self.unlabelled)
    }

    fn density_means(&self, candidate: usize) -> (f64, f64) {
        match &self.density {
            Some(cache) => cache.means(candidate, self.labelled.len(), self.unlabelled.len()),
            None => (
                mean_cosine_distance(&self.data.features, candidate, &self.labelled),
                mean_cosine_distance(&self.data.features, candidate, &self.unlabelled),
            ),
        }
    }

    pub fn compute_action_features(&self, candidate: usize) -> Result<ActionFeatures> {
        if self.unlabelled.binary_search(&candidate).is_err() {
            return Err(Error::domain(format!("row {candidate} is not an unlabelled candidate")));
        }
        let row = self.data.features.row(candidate).to_vec();
        let score = self.classifier.proba_row(&row);
        let (gl, gu) = self.density_means(candidate);
        Ok(ActionFeatures {
            score,
            mean_dist_labelled: gl,
            mean_dist_unlabelled: gu,
        })
    }

    /// Action features of every candidate, in `unlabelled()` order.
    pub fn all_action_features(&self) -> Result<Vec<ActionFeatures>> {
        let scores = self.candidate_scores()?;
        Ok(self
            .unlabelled
            .iter()
            .zip(scores)
            .map(|(&c, score)| {
                let (gl, gu) = self.density_means(c);
                ActionFeatures {
                    score,
                    mean_dist_labelled: gl,
                    mean_dist_unlabelled: gu,
                }
            })
            .collect())
    }

    /// Labels `chosen`, refits the classifier and re-measures quality.
    pub fn step(&mut self, chosen: usize) -> Result<StepOutcome> {
        let pos = self
            .unlabelled
            .binary_search(&chosen)
            .map_err(|_| Error::domain(format!("row {chosen} is not an unlabelled candidate")))?;
        self.unlabelled.remove(pos);
        self.labelled.push(chosen);
        if let Some(cache) = &mut self.density {
            cache.move_to_labelled(chosen, &self.unlabelled);
        }
        self.step += 1;
        self.classifier = fit_classifier(
            self.model,
            &self.model_config,
            &self.data.features,
            &self.data.labels,
            &self.labelled,
            derive_seed(self.seed, &[self.step as u64]),
        )?;
        self.quality = self.measure_quality()?;
        Ok(StepOutcome {
            reward: STEP_REWARD,
            terminal: self.terminal_reason(),
        })
    }
}

/// Starts a training episode on a raw dataset.
///
/// Splits off a stratified quality set `D'`, fits preprocessing on the
/// remaining training rows only, labels one random row per class, reserves
/// `V` from the other training rows and sets the target quality to
/// `quality_ratio` times the accuracy on `D'` of a model fitted on all
/// training rows. Datasets above `max_rows` are first reduced to a
/// stratified subsample of that size.
pub fn begin_episode(raw: &RawDataset, config: &EpisodeConfig, seed: u64) -> Result<EpisodeState> {
    let mut all: Vec<usize> = (0..raw.n_rows()).collect();
    if let Some(cap) = config.max_rows {
        if raw.n_rows() > cap {
            let fraction = cap as f64 / raw.n_rows() as f64;
            all = stratified_split(&all, &raw.labels, fraction, derive_seed(seed, &[0]))?.1;
        }
    }
    let (train, test) = stratified_split(&all, &raw.labels, config.test_fraction, derive_seed(seed, &[1]))?;
    let needed = config.v_size + 3;
    if train.len() < needed {
        return Err(Error::domain(format!(
            "training split has {} rows; need at least {needed} ({} for V, 2 initial labels, 1 candidate)",
            train.len(),
            config.v_size
        )));
    }
    let spec = fit_preprocess(raw, &train)?;
    let data = Arc::new(apply_preprocess(&spec, raw)?);

    let (a, b) = sample_initial_labels(&train, &data.labels, derive_seed(seed, &[2]))?;
    let mut rest: Vec<usize> = train.iter().copied().filter(|&r| r != a && r != b).collect();
    rest.shuffle(&mut rng_from_seed(derive_seed(seed, &[3])));
    let v_set = rest[..config.v_size].to_vec();
    let pool = rest[config.v_size..].to_vec();
    if pool.is_empty() {
        return Err(Error::domain("candidate pool is empty after reserving V"));
    }

    let threshold = match &config.quality_oracle {
        Some(o) => o.threshold,
        None => {
            let full = fit_classifier(
                config.model,
                &config.model_config,
                &data.features,
                &data.labels,
                &train,
                derive_seed(seed, &[4]),
            )?;
            config.quality_ratio * accuracy_on(&full, &data.features, &data.labels, &test)?
        }
    };

    EpisodeState::from_setup(EpisodeSetup {
        data,
        initial: (a, b),
        pool,
        v_set,
        test_rows: test,
        threshold,
        max_steps: config.max_steps,
        model: config.model,
        model_config: config.model_config.clone(),
        seed: derive_seed(seed, &[5]),
        track_density: true,
        quality_curve: config.quality_oracle.as_ref().map(|o| o.curve.clone()),
    })
}
