//! Evaluation protocol: learning curves to a label budget, ALC scores,
//! k-fold x repeat grids with shared initializations, paired t-tests and
//! win/tie/loss tables.

mod grid;
mod report;
mod stats;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::seed::{derive_seed, name_tag, rng_from_seed};
use crate::data::{apply_preprocess, fit_preprocess, sample_initial_labels, Dataset, FoldSplit, RawDataset};
use crate::env::{EpisodeSetup, EpisodeState, V_SIZE};
use crate::error::{Error, Result};
use crate::models::{ModelConfig, ModelKind};
use crate::strategies::{select_learned, select_margin, select_random, PolicyArtifact, StrategyKind};

use rand::seq::SliceRandom;

pub use grid::{run_benchmark, BenchmarkPlan, BenchmarkResults};
pub use report::{
    curve_path, emit_report, parse_runs_csv, read_curve_file, read_curves, read_runs_csv,
    render_alc_table, render_slice_table, write_runs_csv, ReportFiles, RUNS_HEADER,
};
pub use stats::{
    aggregate_win_tie_loss, compute_alc, paired_t_test, slice_accuracy_at, CellSummary,
    ComparisonReport, Outcome, SliceRow, SliceTable, TTest, SIGNIFICANCE_LEVEL, SLICE_SIZES,
};

/// Test accuracy after each labelling step of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub dataset: String,
    pub model: ModelKind,
    pub strategy: StrategyKind,
    pub fold: usize,
    pub repeat: usize,
    pub seed: u64,
    /// `|L|` at each recorded point, starting at 2.
    pub budgets: Vec<usize>,
    pub accuracies: Vec<f64>,
    /// The two rows labelled before the first query.
    pub initial: Option<(usize, usize)>,
    /// Rows queried, in order.
    pub queries: Vec<usize>,
    /// Set when the pool ran out before the budget; holds the final `|L|`.
    pub truncated_at: Option<usize>,
}

/// One row of the per-run table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub model: ModelKind,
    pub strategy: StrategyKind,
    pub fold: usize,
    pub repeat: usize,
    pub seed: u64,
    pub alc: f64,
    pub truncated_at: Option<usize>,
}

impl RunRecord {
    pub fn from_curve(curve: &LearningCurve) -> Result<Self> {
        Ok(Self {
            dataset: curve.dataset.clone(),
            model: curve.model,
            strategy: curve.strategy,
            fold: curve.fold,
            repeat: curve.repeat,
            seed: curve.seed,
            alc: compute_alc(curve)?,
            truncated_at: curve.truncated_at,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSettings {
    /// Stop once `|L|` reaches this.
    pub budget: usize,
    pub folds: usize,
    pub repeats: usize,
    pub master_seed: u64,
    pub model_config: ModelConfig,
    pub v_size: usize,
    /// Score only a random subset of this many candidates with the learned policy.
    pub candidate_cap: Option<usize>,
    /// Worker threads for independent runs.
    pub parallelism: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            budget: 250,
            folds: 5,
            repeats: 5,
            master_seed: 0,
            model_config: ModelConfig::default(),
            v_size: V_SIZE,
            candidate_cap: None,
            parallelism: 1,
        }
    }
}

/// One cross-validation fold, preprocessed with statistics of its training rows.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub data: Arc<Dataset>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

pub fn prepare_fold(raw: &RawDataset, split: &FoldSplit, fold: usize) -> Result<FoldData> {
    if fold >= split.fold_count {
        return Err(Error::domain(format!("fold {fold} out of range")));
    }
    let train_rows = split.train_rows(fold);
    let test_rows = split.test_rows(fold);
    let spec = fit_preprocess(raw, &train_rows)?;
    Ok(FoldData {
        data: Arc::new(apply_preprocess(&spec, raw)?),
        train_rows,
        test_rows,
    })
}

/// Seed of one `(dataset, fold, repeat)` cell; shared by every strategy and model.
pub fn run_seed(master_seed: u64, dataset: &str, fold: usize, repeat: usize) -> u64 {
    derive_seed(master_seed, &[name_tag(dataset), fold as u64, repeat as u64])
}

/// Seed of the fold assignment of a dataset.
pub fn fold_seed(master_seed: u64, dataset: &str) -> u64 {
    derive_seed(master_seed, &[name_tag(dataset), 0xf01d])
}

/// Runs one strategy/model pair on one fold until `|L| = budget`.
///
/// The initial pair and the random-sampling stream depend only on
/// `(dataset, fold, repeat)`. The learned strategy additionally reserves
/// `v_size` training rows for its state vector; they are never queried.
#[allow(clippy::too_many_arguments)]
pub fn run_learning_curve(
    dataset: &str,
    fold_data: &FoldData,
    fold: usize,
    repeat: usize,
    strategy: StrategyKind,
    model: ModelKind,
    artifact: Option<&PolicyArtifact>,
    settings: &BenchSettings,
) -> Result<LearningCurve> {
    if settings.budget < 2 {
        return Err(Error::domain("budget must be at least 2"));
    }
    let seed = run_seed(settings.master_seed, dataset, fold, repeat);
    let labels = &fold_data.data.labels;
    let initial = sample_initial_labels(&fold_data.train_rows, labels, derive_seed(seed, &[1]))?;
    let mut rest: Vec<usize> = fold_data
        .train_rows
        .iter()
        .copied()
        .filter(|&r| r != initial.0 && r != initial.1)
        .collect();
    let mut v_set = Vec::new();
    if strategy == StrategyKind::Learned {
        let artifact = artifact.ok_or_else(|| Error::domain("learned strategy needs a policy artifact"))?;
        if artifact.v_size != settings.v_size {
            return Err(Error::Compatibility(format!(
                "policy expects a reserved set of {} rows, benchmark uses {}",
                artifact.v_size, settings.v_size
            )));
        }
        if rest.len() <= settings.v_size {
            return Err(Error::domain(format!(
                "{dataset}: fold {fold} has {} training rows; too few to reserve {} for the policy state",
                fold_data.train_rows.len(),
                settings.v_size
            )));
        }
        rest.shuffle(&mut rng_from_seed(derive_seed(seed, &[3])));
        v_set = rest.drain(..settings.v_size).collect();
    }
    if rest.is_empty() {
        return Err(Error::domain(format!("{dataset}: fold {fold} has an empty candidate pool")));
    }
    let mut state = EpisodeState::from_setup(EpisodeSetup {
        data: fold_data.data.clone(),
        initial,
        pool: rest,
        v_set,
        test_rows: fold_data.test_rows.clone(),
        threshold: f64::INFINITY,
        max_steps: None,
        model,
        model_config: settings.model_config.clone(),
        seed: derive_seed(seed, &[4, name_tag(model.id())]),
        track_density: strategy == StrategyKind::Learned,
        quality_curve: None,
    })?;
    let mut rng = rng_from_seed(derive_seed(seed, &[2]));
    let mut curve = LearningCurve {
        dataset: dataset.to_string(),
        model,
        strategy,
        fold,
        repeat,
        seed,
        budgets: vec![2],
        accuracies: vec![state.quality()],
        initial: Some(initial),
        queries: Vec::new(),
        truncated_at: None,
    };
    while state.labelled().len() < settings.budget {
        if state.unlabelled().is_empty() {
            curve.truncated_at = Some(state.labelled().len());
            break;
        }
        let row = match strategy {
            StrategyKind::Random => select_random(&state, &mut rng)?,
            StrategyKind::Margin => select_margin(&state)?,
            StrategyKind::Learned => select_learned(
                &state,
                artifact.expect("checked above"),
                settings.candidate_cap,
                &mut rng,
            )?,
        };
        state.step(row)?;
        curve.queries.push(row);
        curve.budgets.push(state.labelled().len());
        curve.accuracies.push(state.quality());
    }
    Ok(curve)
}
