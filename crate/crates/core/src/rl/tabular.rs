use crate::error::{Error, Result};

/// State-action table; `values[s]` holds one entry per action available in `s`.
/// A state without actions is absorbing and contributes 0 to bootstraps.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub values: Vec<Vec<f64>>,
}

impl QTable {
    pub fn zeros(actions_per_state: &[usize]) -> Self {
        Self {
            values: actions_per_state.iter().map(|&k| vec![0.0; k]).collect(),
        }
    }

    pub fn get(&self, s: usize, a: usize) -> Option<f64> {
        self.values.get(s)?.get(a).copied()
    }

    pub fn max_value(&self, s: usize) -> Option<f64> {
        let row = self.values.get(s)?;
        if row.is_empty() {
            return Some(0.0);
        }
        Some(row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }
}

/// `Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a'))`.
pub fn tabular_q_update(
    q: &mut QTable,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
    alpha: f64,
    gamma: f64,
) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::domain(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    let current = q
        .get(s, a)
        .ok_or_else(|| Error::domain(format!("unknown state/action ({s}, {a})")))?;
    let bootstrap = q
        .max_value(s_next)
        .ok_or_else(|| Error::domain(format!("unknown state {s_next}")))?;
    q.values[s][a] = (1.0 - alpha) * current + alpha * (r + gamma * bootstrap);
    Ok(())
}
