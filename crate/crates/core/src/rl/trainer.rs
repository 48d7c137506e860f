use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::seed::{derive_seed, rng_from_seed, SeededRng};
use crate::data::RawDataset;
use crate::env::{begin_episode, EpisodeConfig, TerminalReason};
use crate::error::{Error, Result};
use crate::strategies::{argmax_first, corpus_hash, PolicyArtifact, FEATURE_SCHEMA};

use super::network::{soft_update_target, NetworkShape, QNetwork};
use super::replay::{Experience, ReplayBuffer};
use super::schedule::{epsilon_value, EpsilonDecay, EpsilonSchedule};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub target_copy_factor: f64,
    pub epsilon: EpsilonSchedule,
    pub epsilon_decay: EpsilonDecay,
    pub warm_start_episodes: usize,
    pub nn_updates_per_warm_start: usize,
    pub training_iterations: usize,
    pub episodes_per_iteration: usize,
    pub updates_per_iteration: usize,
    pub double_dqn: bool,
    pub replay_capacity: usize,
    pub prioritized_replay_exponent: f64,
    pub priority_floor: f64,
    pub seed: u64,
    pub episode: EpisodeConfig,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.999,
            learning_rate: 1e-4,
            batch_size: 32,
            target_copy_factor: 0.01,
            epsilon: EpsilonSchedule::default(),
            epsilon_decay: EpsilonDecay::PerUpdate,
            warm_start_episodes: 100,
            nn_updates_per_warm_start: 100,
            training_iterations: 1000,
            episodes_per_iteration: 10,
            updates_per_iteration: 60,
            double_dqn: true,
            replay_capacity: 10_000,
            prioritized_replay_exponent: 3.0,
            priority_floor: 1e-6,
            seed: 0,
            episode: EpisodeConfig::default(),
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::domain(format!("invalid trainer config: {m}")));
        if !(0.0..1.0).contains(&self.gamma) {
            return fail("gamma must lie in [0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.replay_capacity == 0 {
            return fail("batch_size and replay_capacity must be positive");
        }
        if !(0.0..=1.0).contains(&self.target_copy_factor) {
            return fail("target_copy_factor must lie in [0, 1]");
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) || e.end > e.start {
            return fail("epsilon must satisfy 0 <= end <= start <= 1");
        }
        if self.episodes_per_iteration == 0 && self.training_iterations > 0 {
            return fail("episodes_per_iteration must be positive");
        }
        Ok(())
    }

    /// JSON snapshot stored in trained artifacts.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Bootstrapped regression target for one transition.
///
/// Terminal transitions return `r`. Otherwise the next action is chosen by
/// `online` (double) or `target` (single) and evaluated by `target`.
pub fn compute_td_target(
    exp: &Experience,
    online: &QNetwork,
    target: &QNetwork,
    gamma: f64,
    double_dqn: bool,
) -> Result<f64> {
    if online.shape != target.shape {
        return Err(Error::domain("online and target networks differ in shape"));
    }
    if exp.is_terminal() {
        return Ok(exp.reward);
    }
    let target_q = target.q_values(&exp.next_state, &exp.next_actions)?;
    let bootstrap = if double_dqn {
        let online_q = online.q_values(&exp.next_state, &exp.next_actions)?;
        target_q[argmax_first(&online_q).expect("non-empty")]
    } else {
        target_q[argmax_first(&target_q).expect("non-empty")]
    };
    Ok(exp.reward + gamma * bootstrap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub dataset: String,
    pub steps: usize,
    pub terminal: Option<TerminalReason>,
    pub total_reward: f64,
}

/// Runs one episode, pushing every transition into `buffer`.
///
/// With probability `epsilon` a uniform candidate is chosen, otherwise the
/// argmax of `Q` under `net`.
pub fn run_training_episode(
    dataset: &RawDataset,
    config: &EpisodeConfig,
    net: &QNetwork,
    buffer: &mut ReplayBuffer,
    epsilon: f64,
    rng: &mut SeededRng,
) -> Result<EpisodeStats> {
    run_episode_with(dataset, config, net, buffer, &mut |_| epsilon, rng)
}

/// As [`run_training_episode`], with `epsilon_at(t)` giving epsilon at step `t`.
pub fn run_episode_with(
    dataset: &RawDataset,
    config: &EpisodeConfig,
    net: &QNetwork,
    buffer: &mut ReplayBuffer,
    epsilon_at: &mut dyn FnMut(usize) -> f64,
    rng: &mut SeededRng,
) -> Result<EpisodeStats> {
    let mut state = begin_episode(dataset, config, rng.gen())?;
    let mut stats = EpisodeStats {
        dataset: dataset.name.clone(),
        steps: 0,
        terminal: state.terminal_reason(),
        total_reward: 0.0,
    };
    if stats.terminal.is_some() {
        return Ok(stats);
    }
    let mut s = state.compute_state()?;
    let mut actions = state.all_action_features()?;
    loop {
        let eps = epsilon_at(stats.steps);
        let idx = if rng.gen::<f64>() < eps {
            rng.gen_range(0..actions.len())
        } else {
            argmax_first(&net.q_values(&s, &actions)?).expect("non-empty pool")
        };
        let chosen = state.unlabelled()[idx];
        let action = actions[idx];
        let outcome = state.step(chosen)?;
        stats.steps += 1;
        stats.total_reward += outcome.reward;
        let next_s = state.compute_state()?;
        let next_actions = if outcome.terminal.is_some() {
            Vec::new()
        } else {
            state.all_action_features()?
        };
        buffer.push(Experience {
            state: s,
            action,
            reward: outcome.reward,
            next_state: next_s.clone(),
            next_actions: next_actions.clone(),
        });
        if let Some(reason) = outcome.terminal {
            stats.terminal = Some(reason);
            return Ok(stats);
        }
        s = next_s;
        actions = next_actions;
    }
}

/// One minibatch step; returns the mean absolute TD error of the batch.
pub fn update_step(
    net: &mut QNetwork,
    target: &mut QNetwork,
    buffer: &mut ReplayBuffer,
    config: &TrainerConfig,
    rng: &mut SeededRng,
) -> Result<f64> {
    let batch = buffer.sample_batch(config.batch_size, rng)?;
    let mut indices = Vec::with_capacity(batch.len());
    let mut deltas = Vec::with_capacity(batch.len());
    let mut items = Vec::with_capacity(batch.len());
    for (i, exp) in &batch {
        let y = compute_td_target(exp, net, target, config.gamma, config.double_dqn)?;
        let q = net.forward(&exp.state, &exp.action)?;
        indices.push(*i);
        deltas.push(y - q);
        items.push((&exp.state, &exp.action, y));
    }
    let grad = net.backward(&items)?;
    drop(batch);
    net.apply_gradient(&grad, config.learning_rate);
    buffer.update_priorities(&indices, &deltas)?;
    soft_update_target(target, net, config.target_copy_factor)?;
    Ok(deltas.iter().map(|d| d.abs()).sum::<f64>() / deltas.len() as f64)
}

/// Trains a Q-policy on a corpus of datasets.
///
/// Warm start: random-policy episodes on uniformly drawn datasets, then a
/// block of updates. Each iteration then draws one dataset, runs
/// `episodes_per_iteration` epsilon-greedy episodes on it and performs
/// `updates_per_iteration` updates. One log line is written per iteration.
pub fn train_policy(
    corpus: &[RawDataset],
    config: &TrainerConfig,
    log: &mut dyn Write,
) -> Result<PolicyArtifact> {
    if corpus.is_empty() {
        return Err(Error::domain("training corpus is empty"));
    }
    config.validate()?;
    let mut rng = rng_from_seed(derive_seed(config.seed, &[0x7a41]));
    let shape = NetworkShape {
        state_dim: config.episode.v_size,
        ..NetworkShape::default()
    };
    let mut net = QNetwork::init(shape, &mut rng);
    let mut target = net.clone();
    let mut buffer = ReplayBuffer::new(
        config.replay_capacity,
        config.prioritized_replay_exponent,
        config.priority_floor,
    )?;
    let write_log = |log: &mut dyn Write, line: String| -> Result<()> {
        writeln!(log, "{line}").map_err(|e| Error::io("<training log>", e))
    };

    let mut warm_steps = 0usize;
    for _ in 0..config.warm_start_episodes {
        let d = &corpus[rng.gen_range(0..corpus.len())];
        warm_steps += run_training_episode(d, &config.episode, &net, &mut buffer, 1.0, &mut rng)?.steps;
    }
    let mut warm_delta = 0.0;
    if !buffer.is_empty() {
        for _ in 0..config.nn_updates_per_warm_start {
            warm_delta += update_step(&mut net, &mut target, &mut buffer, config, &mut rng)?;
        }
    }
    write_log(
        log,
        format!(
            "warm_start episodes={} mean_length={:.3} updates={} mean_abs_td={:.6}",
            config.warm_start_episodes,
            warm_steps as f64 / config.warm_start_episodes.max(1) as f64,
            config.nn_updates_per_warm_start,
            warm_delta / config.nn_updates_per_warm_start.max(1) as f64,
        ),
    )?;

    let mut updates: u64 = 0;
    let mut transitions: u64 = 0;
    for it in 0..config.training_iterations {
        let d = &corpus[rng.gen_range(0..corpus.len())];
        let mut steps = 0usize;
        for _ in 0..config.episodes_per_iteration {
            let stats = match config.epsilon_decay {
                EpsilonDecay::PerUpdate => {
                    let eps = epsilon_value(updates, &config.epsilon);
                    run_training_episode(d, &config.episode, &net, &mut buffer, eps, &mut rng)?
                }
                EpsilonDecay::PerTransition => {
                    let base = transitions;
                    let schedule = config.epsilon;
                    run_episode_with(
                        d,
                        &config.episode,
                        &net,
                        &mut buffer,
                        &mut |t| epsilon_value(base + t as u64, &schedule),
                        &mut rng,
                    )?
                }
            };
            steps += stats.steps;
            transitions += stats.steps as u64;
        }
        let mut delta = 0.0;
        for _ in 0..config.updates_per_iteration {
            delta += update_step(&mut net, &mut target, &mut buffer, config, &mut rng)?;
            updates += 1;
        }
        let eps = match config.epsilon_decay {
            EpsilonDecay::PerUpdate => epsilon_value(updates, &config.epsilon),
            EpsilonDecay::PerTransition => epsilon_value(transitions, &config.epsilon),
        };
        write_log(
            log,
            format!(
                "iteration={} dataset={} mean_length={:.3} epsilon={:.4} mean_abs_td={:.6}",
                it + 1,
                d.name,
                steps as f64 / config.episodes_per_iteration as f64,
                eps,
                delta / config.updates_per_iteration.max(1) as f64,
            ),
        )?;
    }

    Ok(PolicyArtifact {
        network: net,
        v_size: config.episode.v_size,
        feature_schema: FEATURE_SCHEMA,
        hyperparameters: config.snapshot(),
        corpus_hash: corpus_hash(corpus),
    })
}
