use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{LearningCurve, RunRecord};
use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::strategies::StrategyKind;

/// Two-sided level below which a rival counts as significantly different.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

/// Label budgets reported in the accuracy-slice table.
pub const SLICE_SIZES: [usize; 4] = [32, 64, 128, 250];

/// `100 *` mean accuracy over the recorded points.
pub fn compute_alc(curve: &LearningCurve) -> Result<f64> {
    if curve.accuracies.is_empty() {
        return Err(Error::domain("cannot score an empty learning curve"));
    }
    Ok(100.0 * curve.accuracies.iter().sum::<f64>() / curve.accuracies.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
}

/// Two-sided paired t-test on `a - b` with `n - 1` degrees of freedom.
///
/// All-zero differences give `t = 0, p = 1`; zero spread with a nonzero mean
/// gives `t = +-inf, p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::domain("a paired t-test needs at least 2 pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().all(|&v| v == 0.0) {
        return Ok(TTest { t: 0.0, p: 1.0 });
    }
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    if sd == 0.0 || sd <= 1e-14 * mean.abs() {
        return Ok(TTest {
            t: f64::INFINITY.copysign(mean),
            p: 0.0,
        });
    }
    let t = mean / (sd / nf.sqrt());
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::domain(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(TTest { t, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Win,
    Tie,
    Loss,
}

/// Summary of one `(dataset, model, strategy)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub dataset: String,
    pub model: ModelKind,
    pub strategy: StrategyKind,
    pub mean_alc: f64,
    pub runs: usize,
    /// p-value against the best strategy of the same model; `None` for the best itself.
    pub p_vs_best: Option<f64>,
    /// Not significantly different from the best.
    pub marked: bool,
    pub outcome: Outcome,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub datasets: Vec<String>,
    pub models: Vec<ModelKind>,
    pub strategies: Vec<StrategyKind>,
    /// Ordered by dataset, model, strategy.
    pub cells: Vec<CellSummary>,
}

impl ComparisonReport {
    pub fn cell(&self, dataset: &str, model: ModelKind, strategy: StrategyKind) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.model == model && c.strategy == strategy)
    }

    /// Mean over datasets of the cell means.
    pub fn grand_mean(&self, model: ModelKind, strategy: StrategyKind) -> f64 {
        let v: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.model == model && c.strategy == strategy)
            .map(|c| c.mean_alc)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// `[wins, ties, losses]` over datasets.
    pub fn win_tie_loss(&self, model: ModelKind, strategy: StrategyKind) -> [usize; 3] {
        let mut out = [0; 3];
        for c in self.cells.iter().filter(|c| c.model == model && c.strategy == strategy) {
            out[c.outcome as usize] += 1;
        }
        out
    }
}

/// Compares strategies within each `(dataset, model)`.
///
/// The best mean wins when every rival is significantly worse; otherwise the
/// best and all rivals indistinguishable from it tie, and the rest lose.
/// Runs are paired by `(fold, repeat)`.
pub fn aggregate_win_tie_loss(runs: &[RunRecord]) -> Result<ComparisonReport> {
    if runs.is_empty() {
        return Err(Error::domain("no runs to aggregate"));
    }
    type Key = (String, ModelKind, StrategyKind);
    let mut grouped: BTreeMap<Key, BTreeMap<(usize, usize), &RunRecord>> = BTreeMap::new();
    for r in runs {
        let cell = grouped
            .entry((r.dataset.clone(), r.model, r.strategy))
            .or_default();
        if cell.insert((r.fold, r.repeat), r).is_some() {
            return Err(Error::domain(format!(
                "duplicate run {}/{}/{} fold {} repeat {}",
                r.dataset, r.model, r.strategy, r.fold, r.repeat
            )));
        }
    }
    let mut datasets: Vec<String> = grouped.keys().map(|k| k.0.clone()).collect();
    datasets.dedup();
    let mut models: Vec<ModelKind> = grouped.keys().map(|k| k.1).collect();
    models.sort();
    models.dedup();
    let mut strategies: Vec<StrategyKind> = grouped.keys().map(|k| k.2).collect();
    strategies.sort();
    strategies.dedup();

    let mut cells = Vec::new();
    for d in &datasets {
        for &m in &models {
            let mut vectors = Vec::new();
            let mut keys: Option<Vec<(usize, usize)>> = None;
            for &s in &strategies {
                let cell = grouped.get(&(d.clone(), m, s)).ok_or_else(|| {
                    Error::domain(format!("missing cell: dataset {d}, model {m}, strategy {s}"))
                })?;
                let k: Vec<(usize, usize)> = cell.keys().copied().collect();
                match &keys {
                    None => keys = Some(k),
                    Some(prev) if *prev != k => {
                        return Err(Error::domain(format!(
                            "cell dataset {d}, model {m}, strategy {s} has runs that do not pair with the other strategies"
                        )))
                    }
                    _ => {}
                }
                let alcs: Vec<f64> = cell.values().map(|r| r.alc).collect();
                let truncated = cell.values().any(|r| r.truncated_at.is_some());
                vectors.push((s, alcs, truncated));
            }
            let means: Vec<f64> = vectors
                .iter()
                .map(|(_, v, _)| v.iter().sum::<f64>() / v.len() as f64)
                .collect();
            let mut best = 0;
            for (i, &mu) in means.iter().enumerate() {
                if mu > means[best] {
                    best = i;
                }
            }
            let mut pvals = vec![None; vectors.len()];
            for i in 0..vectors.len() {
                if i != best {
                    let p = if vectors[i].1.len() >= 2 {
                        paired_t_test(&vectors[best].1, &vectors[i].1)?.p
                    } else if vectors[i].1 == vectors[best].1 {
                        1.0
                    } else {
                        0.0
                    };
                    pvals[i] = Some(p);
                }
            }
            let any_tie = pvals.iter().flatten().any(|&p| p >= SIGNIFICANCE_LEVEL);
            for (i, (s, alcs, truncated)) in vectors.into_iter().enumerate() {
                let indistinguishable = pvals[i].is_none_or(|p| p >= SIGNIFICANCE_LEVEL);
                let outcome = if i == best {
                    if any_tie {
                        Outcome::Tie
                    } else {
                        Outcome::Win
                    }
                } else if indistinguishable {
                    Outcome::Tie
                } else {
                    Outcome::Loss
                };
                cells.push(CellSummary {
                    dataset: d.clone(),
                    model: m,
                    strategy: s,
                    mean_alc: means[i],
                    runs: alcs.len(),
                    p_vs_best: pvals[i],
                    marked: indistinguishable,
                    outcome,
                    truncated,
                });
            }
        }
    }
    Ok(ComparisonReport {
        datasets,
        models,
        strategies,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceRow {
    pub dataset: String,
    pub model: ModelKind,
    pub strategy: StrategyKind,
    /// Mean accuracy at each requested size; `None` where some run stopped earlier.
    pub values: Vec<Option<f64>>,
    pub runs: usize,
}

/// Mean accuracy of each `(dataset, model, strategy)` group at fixed `|L|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceTable {
    pub sizes: Vec<usize>,
    pub rows: Vec<SliceRow>,
}

impl SliceTable {
    pub(crate) fn build(curves: &[LearningCurve], sizes: &[usize]) -> Result<SliceTable> {
        if curves.is_empty() {
            return Err(Error::domain("no curves to slice"));
        }
        let mut grouped: BTreeMap<(String, ModelKind, StrategyKind), Vec<&LearningCurve>> =
            BTreeMap::new();
        for c in curves {
            grouped
                .entry((c.dataset.clone(), c.model, c.strategy))
                .or_default()
                .push(c);
        }
        let rows = grouped
            .into_iter()
            .map(|((dataset, model, strategy), group)| {
                let values = sizes
                    .iter()
                    .map(|&size| {
                        let mut total = 0.0;
                        for c in &group {
                            let i = c.budgets.binary_search(&size).ok()?;
                            total += c.accuracies[i];
                        }
                        Some(total / group.len() as f64)
                    })
                    .collect();
                SliceRow {
                    dataset,
                    model,
                    strategy,
                    values,
                    runs: group.len(),
                }
            })
            .collect();
        Ok(SliceTable {
            sizes: sizes.to_vec(),
            rows,
        })
    }

    pub fn get(&self, dataset: &str, model: ModelKind, strategy: StrategyKind) -> Option<&SliceRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.model == model && r.strategy == strategy)
    }
}

/// As [`SliceTable`], failing when any curve lacks a requested size.
pub fn slice_accuracy_at(curves: &[LearningCurve], sizes: &[usize]) -> Result<SliceTable> {
    let table = SliceTable::build(curves, sizes)?;
    for row in &table.rows {
        if let Some(k) = row.values.iter().position(|v| v.is_none()) {
            return Err(Error::domain(format!(
                "budget {} not recorded for {}/{}/{}",
                sizes[k], row.dataset, row.model, row.strategy
            )));
        }
    }
    Ok(table)
}
