use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ActionFeatures, StateVector};
use crate::error::{Error, Result};

/// Layer widths of the action-conditioned Q-network.
///
/// Layer 1 maps the state to `hidden1` sigmoid units; layer 2 takes those
/// units concatenated with the action features to `hidden2` sigmoid units;
/// layer 3 is a linear map to one scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub state_dim: usize,
    pub hidden1: usize,
    pub action_dim: usize,
    pub hidden2: usize,
}

impl Default for NetworkShape {
    fn default() -> Self {
        Self {
            state_dim: 30,
            hidden1: 10,
            action_dim: 3,
            hidden2: 5,
        }
    }
}

impl NetworkShape {
    /// `(out, in)` for each fully connected layer.
    pub fn layers(&self) -> [(usize, usize); 3] {
        [
            (self.hidden1, self.state_dim),
            (self.hidden2, self.hidden1 + self.action_dim),
            (1, self.hidden2),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|(o, i)| o * i + o).sum()
    }

    /// Offsets of `(weights, bias)` for each layer in the flat parameter vector.
    fn offsets(&self) -> [(usize, usize); 3] {
        let mut out = [(0, 0); 3];
        let mut at = 0;
        for (k, (o, i)) in self.layers().into_iter().enumerate() {
            out[k] = (at, at + o * i);
            at += o * i + o;
        }
        out
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Q(s, a; theta) with parameters stored flat, layer by layer, each layer as
/// a row-major weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub shape: NetworkShape,
    pub theta: Vec<f64>,
}

struct Activations {
    h1: Vec<f64>,
    h2: Vec<f64>,
    q: f64,
}

impl QNetwork {
    pub fn zeros(shape: NetworkShape) -> Self {
        Self {
            shape,
            theta: vec![0.0; shape.param_count()],
        }
    }

    pub fn from_params(shape: NetworkShape, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != shape.param_count() {
            return Err(Error::Compatibility(format!(
                "expected {} parameters, got {}",
                shape.param_count(),
                theta.len()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Compatibility("non-finite parameter".into()));
        }
        Ok(Self { shape, theta })
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases.
    pub fn init<R: Rng>(shape: NetworkShape, rng: &mut R) -> Self {
        let mut theta = Vec::with_capacity(shape.param_count());
        for (o, i) in shape.layers() {
            let bound = 1.0 / (i as f64).sqrt();
            for _ in 0..(o * i + o) {
                theta.push(rng.gen_range(-bound..=bound));
            }
        }
        Self { shape, theta }
    }

    fn check_dims(&self, state: &[f64], action: &[f64]) -> Result<()> {
        if state.len() != self.shape.state_dim || action.len() != self.shape.action_dim {
            return Err(Error::domain(format!(
                "network expects state {} / action {}, got {} / {}",
                self.shape.state_dim,
                self.shape.action_dim,
                state.len(),
                action.len()
            )));
        }
        Ok(())
    }

    fn layer1(&self, state: &[f64]) -> Vec<f64> {
        let [(w1, b1), _, _] = self.shape.offsets();
        let d = self.shape.state_dim;
        (0..self.shape.hidden1)
            .map(|u| {
                let row = &self.theta[w1 + u * d..w1 + (u + 1) * d];
                let z: f64 = row.iter().zip(state).map(|(w, s)| w * s).sum::<f64>() + self.theta[b1 + u];
                sigmoid(z)
            })
            .collect()
    }

    /// Layer-2 pre-activations from `h1` alone (action part added later).
    fn layer2_state_part(&self, h1: &[f64]) -> Vec<f64> {
        let [_, (w2, b2), _] = self.shape.offsets();
        let width = self.shape.hidden1 + self.shape.action_dim;
        (0..self.shape.hidden2)
            .map(|u| {
                let row = &self.theta[w2 + u * width..w2 + u * width + self.shape.hidden1];
                row.iter().zip(h1).map(|(w, h)| w * h).sum::<f64>() + self.theta[b2 + u]
            })
            .collect()
    }

    fn head(&self, partial: &[f64], action: &[f64]) -> (Vec<f64>, f64) {
        let [_, (w2, _), (w3, b3)] = self.shape.offsets();
        let width = self.shape.hidden1 + self.shape.action_dim;
        let h2: Vec<f64> = partial
            .iter()
            .enumerate()
            .map(|(u, p)| {
                let start = w2 + u * width + self.shape.hidden1;
                let row = &self.theta[start..start + self.shape.action_dim];
                sigmoid(p + row.iter().zip(action).map(|(w, a)| w * a).sum::<f64>())
            })
            .collect();
        let q = self.theta[w3..w3 + self.shape.hidden2]
            .iter()
            .zip(&h2)
            .map(|(w, h)| w * h)
            .sum::<f64>()
            + self.theta[b3];
        (h2, q)
    }

    fn activations(&self, state: &[f64], action: &[f64]) -> Activations {
        let h1 = self.layer1(state);
        let partial = self.layer2_state_part(&h1);
        let (h2, q) = self.head(&partial, action);
        Activations { h1, h2, q }
    }

    pub fn forward_raw(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        self.check_dims(state, action)?;
        Ok(self.activations(state, action).q)
    }

    pub fn forward(&self, state: &StateVector, action: &ActionFeatures) -> Result<f64> {
        self.forward_raw(state.as_slice(), &action.to_array())
    }

    /// Q-values of every action for one state; the state layer is evaluated once.
    pub fn q_values(&self, state: &StateVector, actions: &[ActionFeatures]) -> Result<Vec<f64>> {
        self.check_dims(state.as_slice(), &[0.0; 3])?;
        let h1 = self.layer1(state.as_slice());
        let partial = self.layer2_state_part(&h1);
        Ok(actions
            .iter()
            .map(|a| self.head(&partial, &a.to_array()).1)
            .collect())
    }

    /// Gradient of `1/2 * mean_i (Q(s_i, a_i) - target_i)^2` with respect to `theta`.
    pub fn backward_raw(&self, batch: &[(&[f64], &[f64], f64)]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::domain("empty batch"));
        }
        let NetworkShape {
            state_dim,
            hidden1,
            action_dim,
            hidden2,
        } = self.shape;
        let [(w1, b1), (w2, b2), (w3, b3)] = self.shape.offsets();
        let width = hidden1 + action_dim;
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; self.theta.len()];
        for &(s, a, target) in batch {
            self.check_dims(s, a)?;
            if !target.is_finite() {
                return Err(Error::domain("non-finite target"));
            }
            let act = self.activations(s, a);
            let dq = (act.q - target) * scale;
            grad[b3] += dq;
            let mut dz2 = vec![0.0; hidden2];
            for u in 0..hidden2 {
                grad[w3 + u] += dq * act.h2[u];
                dz2[u] = dq * self.theta[w3 + u] * act.h2[u] * (1.0 - act.h2[u]);
            }
            let mut dh1 = vec![0.0; hidden1];
            for u in 0..hidden2 {
                let row = w2 + u * width;
                grad[b2 + u] += dz2[u];
                for k in 0..hidden1 {
                    grad[row + k] += dz2[u] * act.h1[k];
                    dh1[k] += dz2[u] * self.theta[row + k];
                }
                for k in 0..action_dim {
                    grad[row + hidden1 + k] += dz2[u] * a[k];
                }
            }
            for k in 0..hidden1 {
                let dz1 = dh1[k] * act.h1[k] * (1.0 - act.h1[k]);
                grad[b1 + k] += dz1;
                let row = w1 + k * state_dim;
                for (g, x) in grad[row..row + state_dim].iter_mut().zip(s) {
                    *g += dz1 * x;
                }
            }
        }
        Ok(grad)
    }

    pub fn backward(&self, batch: &[(&StateVector, &ActionFeatures, f64)]) -> Result<Vec<f64>> {
        let actions: Vec<[f64; 3]> = batch.iter().map(|(_, a, _)| a.to_array()).collect();
        let raw: Vec<(&[f64], &[f64], f64)> = batch
            .iter()
            .zip(&actions)
            .map(|((s, _, t), a)| (s.as_slice(), &a[..], *t))
            .collect();
        self.backward_raw(&raw)
    }

    /// Plain gradient step `theta -= lr * grad`.
    pub fn apply_gradient(&mut self, grad: &[f64], learning_rate: f64) {
        for (t, g) in self.theta.iter_mut().zip(grad) {
            *t -= learning_rate * g;
        }
    }
}

/// `target <- (1 - tau) * target + tau * online`, elementwise.
pub fn soft_update_target(target: &mut QNetwork, online: &QNetwork, tau: f64) -> Result<()> {
    if target.shape != online.shape {
        return Err(Error::domain("target and online networks differ in shape"));
    }
    for (t, o) in target.theta.iter_mut().zip(&online.theta) {
        *t = (1.0 - tau) * *t + tau * o;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count_is_386() {
        assert_eq!(NetworkShape::default().param_count(), 386);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = QNetwork::zeros(NetworkShape::default());
        assert_eq!(net.forward_raw(&[0.3; 30], &[0.1, 0.2, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn constant_head() {
        let mut net = QNetwork::zeros(NetworkShape::default());
        *net.theta.last_mut().unwrap() = 2.5;
        assert_eq!(net.forward_raw(&[0.9; 30], &[0.5, 1.0, 0.2]).unwrap(), 2.5);
        assert_eq!(net.forward_raw(&[0.0; 30], &[0.0, 0.0, 0.0]).unwrap(), 2.5);
    }

    #[test]
    fn dimension_mismatch() {
        let net = QNetwork::zeros(NetworkShape::default());
        assert!(net.forward_raw(&[0.0; 29], &[0.0; 3]).is_err());
        assert!(net.forward_raw(&[0.0; 30], &[0.0; 2]).is_err());
    }

    #[test]
    fn soft_update_values() {
        let shape = NetworkShape::default();
        let online = QNetwork {
            shape,
            theta: vec![1.0; 386],
        };
        let mut target = QNetwork::zeros(shape);
        soft_update_target(&mut target, &online, 0.01).unwrap();
        assert!(target.theta.iter().all(|&v| v == 0.01));
        let before = target.clone();
        soft_update_target(&mut target, &online, 0.0).unwrap();
        assert_eq!(target, before);
        soft_update_target(&mut target, &online, 1.0).unwrap();
        assert_eq!(target, online);
    }
}
