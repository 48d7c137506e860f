use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{check_fit_inputs, ProbabilisticClassifier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Weight of the `0.5 * ||w||^2` penalty; the bias is not penalized.
    pub l2_strength: f64,
    pub max_iters: usize,
    /// Stop when the gradient's infinity norm falls below this.
    pub tolerance: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2_strength: 1.0,
            max_iters: 500,
            tolerance: 1e-6,
        }
    }
}

/// Binary logistic regression; `P(Y = 1 | x) = sigmoid(w.x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegressionModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_strength: f64,
    pub iterations: usize,
}

impl ProbabilisticClassifier for LogisticRegressionModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn proba_row(&self, x: &[f64]) -> f64 {
        let z = dot(&self.weights, x) + self.bias;
        // P(Y=0) = sigmoid(-z)
        sigmoid(-z)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Regularized negative log-likelihood and its gradient at `(weights, bias)`.
///
/// Objective: `sum_i [log(1 + e^{z_i}) - y_i z_i] + l2/2 * ||w||^2` with
/// `z_i = w.x_i + b`. The gradient is returned as `[dw..., db]`.
pub fn logistic_objective(
    features: &Array2<f64>,
    labels: &[u8],
    rows: &[usize],
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>) {
    let d = weights.len();
    let mut grad = vec![0.0; d + 1];
    let mut loss = 0.0;
    for &r in rows {
        let row = features.row(r);
        let x = row.as_slice().expect("standard layout");
        let z = dot(weights, x) + bias;
        let y = f64::from(labels[r]);
        loss += softplus(z) - y * z;
        let resid = sigmoid(z) - y;
        for (g, xi) in grad[..d].iter_mut().zip(x) {
            *g += resid * xi;
        }
        grad[d] += resid;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad[..d].iter_mut().zip(weights) {
        *g += l2 * w;
    }
    (loss, grad)
}

fn objective_value(
    features: &Array2<f64>,
    labels: &[u8],
    rows: &[usize],
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> f64 {
    let mut loss = 0.0;
    for &r in rows {
        let row = features.row(r);
        let z = dot(weights, row.as_slice().expect("standard layout")) + bias;
        loss += softplus(z) - f64::from(labels[r]) * z;
    }
    loss + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

pub fn fit_logistic_regression(
    features: ArrayView2<'_, f64>,
    labels: &[u8],
    config: &LogisticConfig,
) -> Result<LogisticRegressionModel> {
    let x = features.as_standard_layout().to_owned();
    let rows: Vec<usize> = (0..x.nrows()).collect();
    fit_logistic_regression_rows(&x, labels, &rows, config)
}

/// Full-batch gradient descent with Armijo backtracking, starting from zero.
pub fn fit_logistic_regression_rows(
    features: &Array2<f64>,
    labels: &[u8],
    rows: &[usize],
    config: &LogisticConfig,
) -> Result<LogisticRegressionModel> {
    check_fit_inputs(features, labels, rows)?;
    if !(config.l2_strength >= 0.0) {
        return Err(Error::domain("l2_strength must be non-negative"));
    }
    let features = if features.is_standard_layout() {
        std::borrow::Cow::Borrowed(features)
    } else {
        std::borrow::Cow::Owned(features.as_standard_layout().to_owned())
    };
    let features = features.as_ref();
    let d = features.ncols();
    let l2 = config.l2_strength;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut step = 1.0;
    let mut iterations = 0;
    let (mut loss, mut grad) = logistic_objective(features, labels, rows, &w, b, l2);
    let mut trial_w = vec![0.0; d];
    while iterations < config.max_iters {
        let gnorm_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm_inf < config.tolerance {
            break;
        }
        let gsq: f64 = grad.iter().map(|g| g * g).sum();
        loop {
            for j in 0..d {
                trial_w[j] = w[j] - step * grad[j];
            }
            let trial_b = b - step * grad[d];
            let trial = objective_value(features, labels, rows, &trial_w, trial_b, l2);
            if trial <= loss - 0.5 * step * gsq {
                std::mem::swap(&mut w, &mut trial_w);
                b = trial_b;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                break;
            }
        }
        iterations += 1;
        if step < 1e-20 {
            break;
        }
        (loss, grad) = logistic_objective(features, labels, rows, &w, b, l2);
        step = (step * 2.0).min(1e6);
    }
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::domain("logistic regression diverged"));
    }
    Ok(LogisticRegressionModel {
        weights: w,
        bias: b,
        l2_strength: l2,
        iterations,
    })
}
