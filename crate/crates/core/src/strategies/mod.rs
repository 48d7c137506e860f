//! Query strategies: random sampling, margin sampling and a learned Q-policy.
//!
//! Every strategy returns a row index taken from the episode's current
//! candidate pool. Ties always go to the lowest row index.

mod artifact;

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::seed::SeededRng;
use crate::env::EpisodeState;
use crate::error::{Error, Result};

pub use artifact::{
    corpus_hash, dump_classifier, load_classifier, ArtifactContainer, ArtifactHeader,
    PolicyArtifact, FEATURE_SCHEMA, FORMAT_VERSION, KIND_FOREST, KIND_LOGISTIC, KIND_POLICY, MAGIC,
};

/// Picks the next row to label from `state.unlabelled()`.
pub trait QueryStrategy {
    fn select(&self, state: &EpisodeState, rng: &mut SeededRng) -> Result<usize>;
}

fn require_candidates(state: &EpisodeState) -> Result<()> {
    if state.unlabelled().is_empty() {
        return Err(Error::domain("no unlabelled candidates left"));
    }
    Ok(())
}

/// Index of the first maximum.
pub(crate) fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

pub fn select_random(state: &EpisodeState, rng: &mut SeededRng) -> Result<usize> {
    require_candidates(state)?;
    let u = state.unlabelled();
    Ok(u[rng.gen_range(0..u.len())])
}

/// `|2 p0 - 1|`: the gap between the two class probabilities.
pub fn margin(p0: f64) -> f64 {
    (2.0 * p0 - 1.0).abs()
}

pub fn select_margin(state: &EpisodeState) -> Result<usize> {
    require_candidates(state)?;
    let scores = state.candidate_scores()?;
    let negated: Vec<f64> = scores.iter().map(|&p| -margin(p)).collect();
    Ok(state.unlabelled()[argmax_first(&negated).expect("non-empty")])
}

/// Argmax of `Q(s, a)` over candidates.
///
/// With `candidate_cap = Some(k)` and more than `k` candidates, only a uniform
/// random subset of `k` candidates is scored.
pub fn select_learned(
    state: &EpisodeState,
    artifact: &PolicyArtifact,
    candidate_cap: Option<usize>,
    rng: &mut SeededRng,
) -> Result<usize> {
    require_candidates(state)?;
    if artifact.v_size != state.v_set().len() || artifact.network.shape.state_dim != artifact.v_size {
        return Err(Error::Compatibility(format!(
            "policy expects a reserved set of {} rows, episode has {}",
            artifact.v_size,
            state.v_set().len()
        )));
    }
    let s = state.compute_state()?;
    let pool = state.unlabelled();
    let candidates: Vec<usize> = match candidate_cap {
        Some(k) if k > 0 && pool.len() > k => {
            let mut picked: Vec<usize> = sample(rng, pool.len(), k).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| pool[i]).collect()
        }
        _ => pool.to_vec(),
    };
    let actions = if candidates.len() == pool.len() {
        state.all_action_features()?
    } else {
        candidates
            .iter()
            .map(|&c| state.compute_action_features(c))
            .collect::<Result<Vec<_>>>()?
    };
    let q = artifact.network.q_values(&s, &actions)?;
    Ok(candidates[argmax_first(&q).expect("non-empty")])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "rnd")]
    Random,
    #[serde(rename = "margin")]
    Margin,
    #[serde(rename = "learned")]
    Learned,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::Random, StrategyKind::Margin, StrategyKind::Learned];

    pub fn id(self) -> &'static str {
        match self {
            StrategyKind::Random => "rnd",
            StrategyKind::Margin => "margin",
            StrategyKind::Learned => "learned",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rnd" | "random" => Ok(StrategyKind::Random),
            "margin" => Ok(StrategyKind::Margin),
            "learned" | "lal" => Ok(StrategyKind::Learned),
            other => Err(Error::domain(format!(
                "unknown strategy '{other}' (expected rnd, margin or learned)"
            ))),
        }
    }
}

/// Random sampling.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomSampling;

impl QueryStrategy for RandomSampling {
    fn select(&self, state: &EpisodeState, rng: &mut SeededRng) -> Result<usize> {
        select_random(state, rng)
    }
}

/// Margin (uncertainty) sampling.
#[derive(Debug, Clone, Copy, Default)]
pub struct MarginSampling;

impl QueryStrategy for MarginSampling {
    fn select(&self, state: &EpisodeState, _rng: &mut SeededRng) -> Result<usize> {
        select_margin(state)
    }
}

/// Greedy deployment of a trained Q-network.
#[derive(Debug, Clone)]
pub struct LearnedPolicy<'a> {
    pub artifact: &'a PolicyArtifact,
    pub candidate_cap: Option<usize>,
}

impl QueryStrategy for LearnedPolicy<'_> {
    fn select(&self, state: &EpisodeState, rng: &mut SeededRng) -> Result<usize> {
        select_learned(state, self.artifact, self.candidate_cap, rng)
    }
}
