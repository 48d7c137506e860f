//! Flat `key = value` run configuration shared by config files and flags.
//!
//! Every key has a default except `manifest`. A key written as `a-b` in a file
//! or as `--a-b` on the command line names the field `a_b`.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use alkit::bench::BenchSettings;
use alkit::models::{ModelConfig, ModelKind};
use alkit::rl::TrainerConfig;
use alkit::strategies::StrategyKind;
use anyhow::{anyhow, bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    TrainPolicy,
    RunBenchmark,
    Report,
}

impl Command {
    pub const ALL: [Command; 3] = [Command::TrainPolicy, Command::RunBenchmark, Command::Report];

    pub fn name(self) -> &'static str {
        match self {
            Command::TrainPolicy => "train-policy",
            Command::RunBenchmark => "run-benchmark",
            Command::Report => "report",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::TrainPolicy => "Train a query policy on a corpus of datasets",
            Command::RunBenchmark => "Run the cross-validated strategy x model benchmark",
            Command::Report => "Regenerate summaries from a stored per-run table",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub manifest: Option<PathBuf>,
    pub out: PathBuf,
    pub trainer: TrainerConfig,
    pub bench: BenchSettings,
    pub strategies: Vec<StrategyKind>,
    pub models: Vec<ModelKind>,
    pub artifact: Option<PathBuf>,
    /// Restricts `report` to these models; `None` keeps all.
    pub model_filter: Option<Vec<ModelKind>>,
    /// Destination of `report`; `None` means `out`.
    pub report_out: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| anyhow!("{key}: cannot parse {value:?}: {e}"))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    match value.trim() {
        "" | "none" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    let items = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        bail!("{key}: list is empty");
    }
    Ok(items)
}

fn show_opt<T: Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn show_path(v: &Option<PathBuf>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |p| p.display().to_string())
}

fn show_list<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn model_pairs(m: &ModelConfig) -> Vec<(&'static str, String)> {
    vec![
        ("lr_l2_strength", m.logistic.l2_strength.to_string()),
        ("lr_max_iters", m.logistic.max_iters.to_string()),
        ("lr_tolerance", m.logistic.tolerance.to_string()),
        ("rf_tree_count", m.forest.tree_count.to_string()),
        ("rf_min_leaf", m.forest.min_leaf.to_string()),
        ("rf_max_features", show_opt(&m.forest.max_features)),
    ]
}

fn set_model(m: &mut ModelConfig, key: &str, v: &str) -> Result<bool> {
    match key {
        "lr_l2_strength" => m.logistic.l2_strength = parse(key, v)?,
        "lr_max_iters" => m.logistic.max_iters = parse(key, v)?,
        "lr_tolerance" => m.logistic.tolerance = parse(key, v)?,
        "rf_tree_count" => m.forest.tree_count = parse(key, v)?,
        "rf_min_leaf" => m.forest.min_leaf = parse(key, v)?,
        "rf_max_features" => m.forest.max_features = parse_opt(key, v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

pub fn help(key: &str) -> &'static str {
    match key {
        "manifest" => "Dataset manifest: one `name, path, label_column` line per dataset",
        "out" => "Output directory (ALKIT_OUT overrides)",
        "seed" => "Master seed",
        "strategies" => "Comma-separated strategies: rnd, margin, learned",
        "models" => "Comma-separated models: lr, rf",
        "budget" => "Stop each curve when |L| reaches this",
        "folds" => "Cross-validation folds",
        "repeats" => "Repeats per fold",
        "artifact" => "Trained policy used by the learned strategy",
        "parallelism" => "Worker threads for independent runs",
        "candidate_cap" => "Score only this many random candidates per learned query",
        "v_size" => "Reserved rows whose scores form the policy state",
        "model" => "Classifier (train-policy) or model filter (report)",
        "report_out" => "Destination of regenerated reports (default: --out)",
        "gamma" => "Discount factor",
        "learning_rate" => "SGD step size",
        "batch_size" => "Replay minibatch size",
        "target_copy_factor" => "Soft target-network update rate",
        "epsilon_start" | "epsilon_end" | "epsilon_steps" => "Linear exploration schedule",
        "epsilon_decay" => "Schedule clock: per-update or per-transition",
        "warm_start_episodes" => "Random-policy episodes before learning",
        "nn_updates_per_warm_start" => "Updates after the warm start",
        "training_iterations" => "Training iterations",
        "episodes_per_iteration" => "Episodes per training iteration",
        "updates_per_iteration" => "Updates per training iteration",
        "double_dqn" => "Use the double-Q target",
        "replay_capacity" => "Replay memory size",
        "prioritized_replay_exponent" => "Priority exponent (0 = uniform replay)",
        "priority_floor" => "Constant added to |TD error| in priorities",
        "test_fraction" => "Share of each episode's rows used to measure quality",
        "quality_ratio" => "Episode target as a share of full-data accuracy",
        "max_steps" => "Episode step cap (none = pool size)",
        "max_rows" => "Subsample larger datasets to this many rows per episode",
        _ => "Classifier hyperparameter",
    }
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            manifest: None,
            out: PathBuf::from("out"),
            trainer: TrainerConfig::default(),
            bench: BenchSettings::default(),
            strategies: vec![StrategyKind::Random, StrategyKind::Margin],
            models: vec![ModelKind::Logistic, ModelKind::Forest],
            artifact: None,
            model_filter: None,
            report_out: None,
        }
    }

    /// Every key of this command with its current value, in a fixed order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut p = Vec::new();
        match self.command {
            Command::TrainPolicy => {
                let t = &self.trainer;
                let e = &t.episode;
                p.push(("manifest", show_path(&self.manifest)));
                p.push(("out", self.out.display().to_string()));
                p.push(("seed", t.seed.to_string()));
                p.push(("gamma", t.gamma.to_string()));
                p.push(("learning_rate", t.learning_rate.to_string()));
                p.push(("batch_size", t.batch_size.to_string()));
                p.push(("target_copy_factor", t.target_copy_factor.to_string()));
                p.push(("epsilon_start", t.epsilon.start.to_string()));
                p.push(("epsilon_end", t.epsilon.end.to_string()));
                p.push(("epsilon_steps", t.epsilon.steps.to_string()));
                p.push(("epsilon_decay", t.epsilon_decay.to_string()));
                p.push(("warm_start_episodes", t.warm_start_episodes.to_string()));
                p.push(("nn_updates_per_warm_start", t.nn_updates_per_warm_start.to_string()));
                p.push(("training_iterations", t.training_iterations.to_string()));
                p.push(("episodes_per_iteration", t.episodes_per_iteration.to_string()));
                p.push(("updates_per_iteration", t.updates_per_iteration.to_string()));
                p.push(("double_dqn", t.double_dqn.to_string()));
                p.push(("replay_capacity", t.replay_capacity.to_string()));
                p.push(("prioritized_replay_exponent", t.prioritized_replay_exponent.to_string()));
                p.push(("priority_floor", t.priority_floor.to_string()));
                p.push(("model", e.model.to_string()));
                p.push(("test_fraction", e.test_fraction.to_string()));
                p.push(("v_size", e.v_size.to_string()));
                p.push(("quality_ratio", e.quality_ratio.to_string()));
                p.push(("max_steps", show_opt(&e.max_steps)));
                p.push(("max_rows", show_opt(&e.max_rows)));
                p.extend(model_pairs(&e.model_config));
            }
            Command::RunBenchmark => {
                let b = &self.bench;
                p.push(("manifest", show_path(&self.manifest)));
                p.push(("out", self.out.display().to_string()));
                p.push(("seed", b.master_seed.to_string()));
                p.push(("strategies", show_list(&self.strategies)));
                p.push(("models", show_list(&self.models)));
                p.push(("budget", b.budget.to_string()));
                p.push(("folds", b.folds.to_string()));
                p.push(("repeats", b.repeats.to_string()));
                p.push(("artifact", show_path(&self.artifact)));
                p.push(("parallelism", b.parallelism.to_string()));
                p.push(("candidate_cap", show_opt(&b.candidate_cap)));
                p.push(("v_size", b.v_size.to_string()));
                p.extend(model_pairs(&b.model_config));
            }
            Command::Report => {
                p.push(("out", self.out.display().to_string()));
                let filter = self.model_filter.as_deref().map_or_else(|| "none".into(), show_list);
                p.push(("model", filter));
                p.push(("report_out", show_path(&self.report_out)));
            }
        }
        p
    }

    pub fn keys(&self) -> Vec<&'static str> {
        self.pairs().into_iter().map(|(k, _)| k).collect()
    }

    /// Sets one key; names may use `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let key = key.as_str();
        if !self.keys().contains(&key) {
            bail!("unknown key {key:?} for {}", self.command.name());
        }
        let v = value.trim();
        match key {
            "manifest" => self.manifest = parse_opt(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "artifact" => self.artifact = parse_opt(key, v)?,
            "report_out" => self.report_out = parse_opt(key, v)?,
            _ => {}
        }
        match self.command {
            Command::TrainPolicy => {
                let t = &mut self.trainer;
                match key {
                    "seed" => t.seed = parse(key, v)?,
                    "gamma" => t.gamma = parse(key, v)?,
                    "learning_rate" => t.learning_rate = parse(key, v)?,
                    "batch_size" => t.batch_size = parse(key, v)?,
                    "target_copy_factor" => t.target_copy_factor = parse(key, v)?,
                    "epsilon_start" => t.epsilon.start = parse(key, v)?,
                    "epsilon_end" => t.epsilon.end = parse(key, v)?,
                    "epsilon_steps" => t.epsilon.steps = parse(key, v)?,
                    "epsilon_decay" => t.epsilon_decay = parse(key, v)?,
                    "warm_start_episodes" => t.warm_start_episodes = parse(key, v)?,
                    "nn_updates_per_warm_start" => t.nn_updates_per_warm_start = parse(key, v)?,
                    "training_iterations" => t.training_iterations = parse(key, v)?,
                    "episodes_per_iteration" => t.episodes_per_iteration = parse(key, v)?,
                    "updates_per_iteration" => t.updates_per_iteration = parse(key, v)?,
                    "double_dqn" => t.double_dqn = parse(key, v)?,
                    "replay_capacity" => t.replay_capacity = parse(key, v)?,
                    "prioritized_replay_exponent" => t.prioritized_replay_exponent = parse(key, v)?,
                    "priority_floor" => t.priority_floor = parse(key, v)?,
                    "model" => t.episode.model = parse(key, v)?,
                    "test_fraction" => t.episode.test_fraction = parse(key, v)?,
                    "v_size" => t.episode.v_size = parse(key, v)?,
                    "quality_ratio" => t.episode.quality_ratio = parse(key, v)?,
                    "max_steps" => t.episode.max_steps = parse_opt(key, v)?,
                    "max_rows" => t.episode.max_rows = parse_opt(key, v)?,
                    _ => {
                        set_model(&mut t.episode.model_config, key, v)?;
                    }
                }
            }
            Command::RunBenchmark => {
                let b = &mut self.bench;
                match key {
                    "seed" => b.master_seed = parse(key, v)?,
                    "strategies" => self.strategies = parse_list(key, v)?,
                    "models" => self.models = parse_list(key, v)?,
                    "budget" => b.budget = parse(key, v)?,
                    "folds" => b.folds = parse(key, v)?,
                    "repeats" => b.repeats = parse(key, v)?,
                    "parallelism" => b.parallelism = parse(key, v)?,
                    "candidate_cap" => b.candidate_cap = parse_opt(key, v)?,
                    "v_size" => b.v_size = parse(key, v)?,
                    _ => {
                        set_model(&mut b.model_config, key, v)?;
                    }
                }
            }
            Command::Report => {
                if key == "model" {
                    self.model_filter = match v {
                        "" | "none" | "all" => None,
                        _ => Some(parse_list(key, v)?),
                    };
                }
            }
        }
        Ok(())
    }

    /// Applies a config file's text; later lines win.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))?;
            self.set(k, v)
                .map_err(|e| anyhow!("config line {}: {e}", i + 1))?;
        }
        Ok(())
    }

    /// The fully resolved configuration in config-file syntax.
    pub fn render(&self) -> String {
        let mut out = format!("# {} resolved configuration\n", self.command.name());
        for (k, v) in self.pairs() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_round_trips() {
        for cmd in Command::ALL {
            let mut a = RunConfig::new(cmd);
            a.set("out", "/tmp/x").unwrap();
            let mut b = RunConfig::new(cmd);
            b.apply_text(&a.render()).unwrap();
            assert_eq!(a.render(), b.render());
        }
    }

    #[test]
    fn unknown_and_misplaced_keys_rejected() {
        let mut c = RunConfig::new(Command::RunBenchmark);
        assert!(c.set("bogus", "1").is_err());
        assert!(c.set("gamma", "0.5").is_err());
        assert!(RunConfig::new(Command::TrainPolicy).set("budget", "3").is_err());
    }

    #[test]
    fn kebab_keys_and_lists() {
        let mut c = RunConfig::new(Command::RunBenchmark);
        c.apply_text("# comment\nstrategies = margin,learned\nrf-tree-count=7\n").unwrap();
        assert_eq!(c.strategies, vec![StrategyKind::Margin, StrategyKind::Learned]);
        assert_eq!(c.bench.model_config.forest.tree_count, 7);
        assert!(c.apply_text("budget").is_err());
    }
}
