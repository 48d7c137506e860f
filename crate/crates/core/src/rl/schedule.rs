use serde::{Deserialize, Serialize};

/// Linear exploration schedule, clamped at `end` after `steps` counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.1,
            steps: 1000,
        }
    }
}

/// What advances the exploration schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonDecay {
    /// One count per parameter update.
    #[default]
    PerUpdate,
    /// One count per environment transition.
    PerTransition,
}

impl std::str::FromStr for EpsilonDecay {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-update" => Ok(Self::PerUpdate),
            "per-transition" => Ok(Self::PerTransition),
            other => Err(crate::Error::domain(format!(
                "unknown epsilon decay '{other}' (expected per-update or per-transition)"
            ))),
        }
    }
}

impl std::fmt::Display for EpsilonDecay {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PerUpdate => "per-update",
            Self::PerTransition => "per-transition",
        })
    }
}

pub fn epsilon_value(count: u64, schedule: &EpsilonSchedule) -> f64 {
    if schedule.steps == 0 || count >= schedule.steps {
        return schedule.end;
    }
    let frac = count as f64 / schedule.steps as f64;
    schedule.start + (schedule.end - schedule.start) * frac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        let s = EpsilonSchedule::default();
        assert_eq!(epsilon_value(0, &s), 1.0);
        assert_eq!(epsilon_value(1000, &s), 0.1);
        assert_eq!(epsilon_value(50_000, &s), 0.1);
        assert!((epsilon_value(500, &s) - 0.55).abs() < 1e-15);
    }

    #[test]
    fn monotone() {
        let s = EpsilonSchedule::default();
        let v: Vec<f64> = (0..1200).map(|c| epsilon_value(c, &s)).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
    }
}
