use rayon::prelude::*;

use super::{fold_seed, prepare_fold, run_learning_curve, BenchSettings, FoldData, LearningCurve, RunRecord};
use crate::data::{stratified_kfold, RawDataset};
use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::strategies::{PolicyArtifact, StrategyKind};

/// A full grid: datasets x folds x repeats x models x strategies.
#[derive(Debug, Clone)]
pub struct BenchmarkPlan<'a> {
    pub datasets: &'a [RawDataset],
    pub models: Vec<ModelKind>,
    pub strategies: Vec<StrategyKind>,
    pub artifact: Option<&'a PolicyArtifact>,
    pub settings: BenchSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResults {
    /// Sorted by dataset, model, strategy, fold, repeat.
    pub records: Vec<RunRecord>,
    /// Same order as `records`.
    pub curves: Vec<LearningCurve>,
}

impl BenchmarkResults {
    /// Builds records from curves and puts both in canonical order.
    pub fn from_curves(mut curves: Vec<LearningCurve>) -> Result<Self> {
        curves.sort_by(|a, b| {
            (&a.dataset, a.model, a.strategy, a.fold, a.repeat)
                .cmp(&(&b.dataset, b.model, b.strategy, b.fold, b.repeat))
        });
        let records = curves.iter().map(RunRecord::from_curve).collect::<Result<_>>()?;
        Ok(Self { records, curves })
    }

    /// Keeps only runs of the listed models.
    pub fn filter_models(&self, models: &[ModelKind]) -> Self {
        let keep: Vec<bool> = self.records.iter().map(|r| models.contains(&r.model)).collect();
        Self {
            records: self
                .records
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(r, _)| r.clone())
                .collect(),
            curves: self
                .curves
                .iter()
                .filter(|c| models.contains(&c.model))
                .cloned()
                .collect(),
        }
    }
}

/// Runs every cell of `plan`. Runs are independent and execute on
/// `settings.parallelism` threads; output order does not depend on scheduling.
pub fn run_benchmark(plan: &BenchmarkPlan<'_>) -> Result<BenchmarkResults> {
    let s = &plan.settings;
    if plan.datasets.is_empty() {
        return Err(Error::domain("benchmark needs at least one dataset"));
    }
    if plan.models.is_empty() || plan.strategies.is_empty() {
        return Err(Error::domain("benchmark needs at least one model and one strategy"));
    }
    if plan.strategies.contains(&StrategyKind::Learned) && plan.artifact.is_none() {
        return Err(Error::domain("strategy 'learned' needs a policy artifact"));
    }
    if s.repeats == 0 {
        return Err(Error::domain("repeats must be positive"));
    }

    let mut folds: Vec<(usize, Vec<FoldData>)> = Vec::with_capacity(plan.datasets.len());
    for (di, raw) in plan.datasets.iter().enumerate() {
        let split = stratified_kfold(&raw.labels, s.folds, fold_seed(s.master_seed, &raw.name))
            .map_err(|e| Error::domain(format!("{}: {e}", raw.name)))?;
        let prepared = (0..s.folds)
            .map(|f| prepare_fold(raw, &split, f))
            .collect::<Result<Vec<_>>>()?;
        folds.push((di, prepared));
    }

    let mut jobs = Vec::new();
    for (di, prepared) in &folds {
        for fold in 0..prepared.len() {
            for repeat in 0..s.repeats {
                for &model in &plan.models {
                    for &strategy in &plan.strategies {
                        jobs.push((*di, fold, repeat, model, strategy));
                    }
                }
            }
        }
    }

    let run = |&(di, fold, repeat, model, strategy): &(usize, usize, usize, ModelKind, StrategyKind)| {
        run_learning_curve(
            &plan.datasets[di].name,
            &folds[di].1[fold],
            fold,
            repeat,
            strategy,
            model,
            plan.artifact,
            s,
        )
    };
    let curves: Vec<LearningCurve> = if s.parallelism <= 1 {
        jobs.iter().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(s.parallelism)
            .build()
            .map_err(|e| Error::domain(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect::<Result<_>>())?
    };
    BenchmarkResults::from_curves(curves)
}
