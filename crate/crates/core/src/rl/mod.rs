//! Deep Q-learning for query policies: the action-conditioned Q-network,
//! prioritized replay, Double-DQN targets, soft target tracking, the
//! exploration schedule and the training loop. A tabular Q-learning update
//! is included for small exact MDPs.

mod network;
mod replay;
mod schedule;
mod tabular;
mod trainer;

pub use network::{soft_update_target, NetworkShape, QNetwork};
pub use replay::{Experience, ReplayBuffer};
pub use schedule::{epsilon_value, EpsilonDecay, EpsilonSchedule};
pub use tabular::{tabular_q_update, QTable};
pub use trainer::{
    compute_td_target, run_episode_with, run_training_episode, train_policy, update_step,
    EpisodeStats, TrainerConfig,
};
