//! Pool-based active learning with learned query policies.
//!
//! * [`data`]: CSV ingestion, preprocessing, stratified splits and seeding.
//! * [`models`]: logistic regression and random forest scorers.
//! * [`env`]: active learning as an episodic decision process.
//! * [`rl`]: Deep Q-learning of a query policy.
//! * [`strategies`]: random, margin and learned query selection.
//! * [`bench`]: learning curves, ALC, paired t-tests and reports.
//! * [`synth`]: seeded synthetic datasets.

pub mod bench;
pub mod data;
pub mod env;
mod error;
pub mod models;
pub mod rl;
pub mod strategies;
pub mod synth;

pub use error::{Error, Result};
