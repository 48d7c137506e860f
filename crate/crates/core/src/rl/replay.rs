use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ActionFeatures, StateVector};
use crate::error::{Error, Result};

/// One recorded transition. `next_actions` is empty iff the transition ended the episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub state: StateVector,
    pub action: ActionFeatures,
    pub reward: f64,
    pub next_state: StateVector,
    pub next_actions: Vec<ActionFeatures>,
}

impl Experience {
    pub fn is_terminal(&self) -> bool {
        self.next_actions.is_empty()
    }
}

/// Prioritized replay memory with ring eviction.
///
/// Item `i` is drawn with probability `rho_i^beta / sum_k rho_k^beta`, where
/// `rho_i = |delta_i| + floor` after its last update and new items enter with
/// the current maximum priority.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    exponent: f64,
    priority_floor: f64,
    entries: Vec<Experience>,
    priorities: Vec<f64>,
    /// Slot overwritten by the next push once full.
    cursor: usize,
    max_priority: f64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, exponent: f64, priority_floor: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::domain("replay capacity must be positive"));
        }
        if !(exponent >= 0.0 && exponent.is_finite()) {
            return Err(Error::domain("prioritization exponent must be finite and >= 0"));
        }
        if !(priority_floor >= 0.0 && priority_floor.is_finite()) {
            return Err(Error::domain("priority floor must be finite and >= 0"));
        }
        Ok(Self {
            capacity,
            exponent,
            priority_floor,
            entries: Vec::new(),
            priorities: Vec::new(),
            cursor: 0,
            max_priority: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, index: usize) -> Option<&Experience> {
        self.entries.get(index)
    }

    pub fn priority(&self, index: usize) -> Option<f64> {
        self.priorities.get(index).copied()
    }

    pub fn priorities(&self) -> &[f64] {
        &self.priorities
    }

    pub fn max_priority(&self) -> f64 {
        self.max_priority
    }

    fn refresh_max(&mut self) {
        self.max_priority = self.priorities.iter().copied().fold(0.0, f64::max);
    }

    /// Stores `exp` at the current maximum priority (1 when empty), evicting the oldest item when full.
    pub fn push(&mut self, exp: Experience) {
        let priority = if self.entries.is_empty() {
            1.0
        } else {
            self.max_priority
        };
        if self.entries.len() < self.capacity {
            self.entries.push(exp);
            self.priorities.push(priority);
        } else {
            let evicted = self.priorities[self.cursor];
            self.entries[self.cursor] = exp;
            self.priorities[self.cursor] = priority;
            self.cursor = (self.cursor + 1) % self.capacity;
            if evicted >= self.max_priority {
                self.refresh_max();
            }
        }
        self.max_priority = self.max_priority.max(priority);
    }

    /// Sampling distribution over stored items.
    pub fn probabilities(&self) -> Vec<f64> {
        let weights: Vec<f64> = self.priorities.iter().map(|r| r.powf(self.exponent)).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// `batch_size` independent draws with replacement.
    pub fn sample_batch<R: Rng>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<(usize, &Experience)>> {
        if self.entries.is_empty() {
            return Err(Error::domain("cannot sample from an empty replay buffer"));
        }
        let mut cumulative = Vec::with_capacity(self.priorities.len());
        let mut acc = 0.0;
        for r in &self.priorities {
            acc += r.powf(self.exponent);
            cumulative.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::domain("replay priorities do not form a distribution"));
        }
        let last = cumulative.len() - 1;
        Ok((0..batch_size)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                let i = cumulative.partition_point(|&c| c <= u).min(last);
                (i, &self.entries[i])
            })
            .collect())
    }

    /// Sets `rho_i = |delta_i| + floor` for each listed item.
    pub fn update_priorities(&mut self, indices: &[usize], td_errors: &[f64]) -> Result<()> {
        if indices.len() != td_errors.len() {
            return Err(Error::domain("indices and TD errors differ in length"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.entries.len()) {
            return Err(Error::domain(format!(
                "replay index {bad} out of range (size {})",
                self.entries.len()
            )));
        }
        for (&i, d) in indices.iter().zip(td_errors) {
            if !d.is_finite() {
                return Err(Error::domain("non-finite TD error"));
            }
            self.priorities[i] = d.abs() + self.priority_floor;
        }
        self.refresh_max();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::seed::rng_from_seed;

    fn exp(tag: f64) -> Experience {
        let a = ActionFeatures {
            score: tag,
            mean_dist_labelled: 0.0,
            mean_dist_unlabelled: 0.0,
        };
        Experience {
            state: StateVector(vec![tag]),
            action: a,
            reward: -1.0,
            next_state: StateVector(vec![tag]),
            next_actions: vec![a],
        }
    }

    #[test]
    fn push_priorities() {
        let mut b = ReplayBuffer::new(10, 3.0, 1e-6).unwrap();
        b.push(exp(0.0));
        assert_eq!(b.priority(0), Some(1.0));
        b.update_priorities(&[0], &[7.0]).unwrap();
        b.push(exp(1.0));
        assert_eq!(b.priority(1), Some(7.0 + 1e-6));
    }

    #[test]
    fn ring_eviction() {
        let mut b = ReplayBuffer::new(3, 1.0, 1e-6).unwrap();
        for k in 0..4 {
            b.push(exp(k as f64));
        }
        assert_eq!(b.len(), 3);
        let tags: Vec<f64> = (0..3).map(|i| b.get(i).unwrap().action.score).collect();
        assert!(!tags.contains(&0.0));
        b.push(exp(4.0));
        let tags: Vec<f64> = (0..3).map(|i| b.get(i).unwrap().action.score).collect();
        assert!(!tags.contains(&1.0));
    }

    #[test]
    fn update_rules() {
        let mut b = ReplayBuffer::new(5, 3.0, 1e-6).unwrap();
        for k in 0..3 {
            b.push(exp(k as f64));
        }
        b.update_priorities(&[1], &[-2.0]).unwrap();
        assert_eq!(b.priority(1), Some(2.0 + 1e-6));
        assert_eq!(b.priority(0), Some(1.0));
        b.update_priorities(&[2], &[0.0]).unwrap();
        assert!(b.priority(2).unwrap() > 0.0);
        assert!(b.probabilities()[2] > 0.0);
        assert!(b.update_priorities(&[3], &[1.0]).is_err());
    }

    #[test]
    fn hand_probabilities() {
        let mut b = ReplayBuffer::new(5, 1.0, 0.0).unwrap();
        b.push(exp(0.0));
        b.push(exp(1.0));
        b.update_priorities(&[0, 1], &[1.0, 3.0]).unwrap();
        let p = b.probabilities();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn empty_sampling_fails() {
        let b = ReplayBuffer::new(5, 1.0, 0.0).unwrap();
        assert!(b.sample_batch(1, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn max_follows_updates() {
        let mut b = ReplayBuffer::new(2, 1.0, 0.0).unwrap();
        b.push(exp(0.0));
        b.push(exp(1.0));
        b.update_priorities(&[0, 1], &[9.0, 2.0]).unwrap();
        assert_eq!(b.max_priority(), 9.0);
        b.update_priorities(&[0], &[1.0]).unwrap();
        assert_eq!(b.max_priority(), 2.0);
        b.push(exp(2.0));
        assert_eq!(b.priority(0), Some(2.0));
    }
}
