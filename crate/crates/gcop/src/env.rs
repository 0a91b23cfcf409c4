//! Finite-horizon controlled processes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::{Error, Result};

/// A finite-horizon environment: `state_count` states, `action_count`
/// actions, per-step rewards in `[0, r_max]`, row-stochastic transitions,
/// and an initial state distribution.
#[derive(Debug, Clone)]
pub struct EnvSpec {
    state_count: usize,
    action_count: usize,
    horizon: usize,
    r_max: f64,
    rewards: Vec<Vec<f64>>,
    transitions: Vec<Vec<Distribution>>,
    initial: Distribution,
}

impl EnvSpec {
    pub fn new(
        horizon: usize,
        r_max: f64,
        rewards: Vec<Vec<f64>>,
        transitions: Vec<Vec<Distribution>>,
        initial: Distribution,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        if !r_max.is_finite() || r_max <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "r_max must be a positive real, got {r_max}"
            )));
        }
        let state_count = rewards.len();
        if state_count == 0 {
            return Err(Error::DimensionMismatch("no states".into()));
        }
        let action_count = rewards[0].len();
        if action_count == 0 {
            return Err(Error::DimensionMismatch("no actions".into()));
        }
        for (s, row) in rewards.iter().enumerate() {
            if row.len() != action_count {
                return Err(Error::DimensionMismatch(format!(
                    "reward row {s} has {} entries, expected {action_count}",
                    row.len()
                )));
            }
            for (a, &r) in row.iter().enumerate() {
                if !r.is_finite() || r < 0.0 || r > r_max {
                    return Err(Error::InvalidParameter(format!(
                        "reward({s},{a}) = {r} outside [0, {r_max}]"
                    )));
                }
            }
        }
        if transitions.len() != state_count {
            return Err(Error::DimensionMismatch(format!(
                "{} transition rows for {state_count} states",
                transitions.len()
            )));
        }
        for (s, row) in transitions.iter().enumerate() {
            if row.len() != action_count {
                return Err(Error::DimensionMismatch(format!(
                    "transition row {s} has {} entries, expected {action_count}",
                    row.len()
                )));
            }
            for (a, d) in row.iter().enumerate() {
                if d.len() != state_count {
                    return Err(Error::DimensionMismatch(format!(
                        "transition({s},{a}) targets {} states, expected {state_count}",
                        d.len()
                    )));
                }
            }
        }
        if initial.len() != state_count {
            return Err(Error::DimensionMismatch(format!(
                "initial distribution over {} states, expected {state_count}",
                initial.len()
            )));
        }
        Ok(Self {
            state_count,
            action_count,
            horizon,
            r_max,
            rewards,
            transitions,
            initial,
        })
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[state][action]
    }

    pub fn transition(&self, state: usize, action: usize) -> &Distribution {
        &self.transitions[state][action]
    }

    pub fn initial(&self) -> &Distribution {
        &self.initial
    }

    /// Loads an environment from a TOML document with keys `states`,
    /// `actions`, `horizon`, `r_max`, `rewards`, `transitions`, `initial`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawEnv = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        raw.build()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

/// On-disk layout of an environment config.
#[derive(Debug, Serialize, Deserialize)]
struct RawEnv {
    states: usize,
    actions: usize,
    horizon: usize,
    r_max: f64,
    /// `rewards[s][a]`
    rewards: Vec<Vec<f64>>,
    /// `transitions[s][a][s']`
    transitions: Vec<Vec<Vec<f64>>>,
    /// `initial[s]`
    initial: Vec<f64>,
}

impl RawEnv {
    fn build(self) -> Result<EnvSpec> {
        if self.rewards.len() != self.states {
            return Err(Error::Config(format!(
                "rewards has {} rows but states = {}",
                self.rewards.len(),
                self.states
            )));
        }
        let transitions = self
            .transitions
            .into_iter()
            .map(|row| row.into_iter().map(Distribution::new).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let env = EnvSpec::new(
            self.horizon,
            self.r_max,
            self.rewards,
            transitions,
            Distribution::new(self.initial)?,
        )?;
        if env.action_count != self.actions {
            return Err(Error::Config(format!(
                "reward rows have {} columns but actions = {}",
                env.action_count, self.actions
            )));
        }
        Ok(env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_state_env() -> EnvSpec {
        EnvSpec::new(
            3,
            1.0,
            vec![vec![1.0, 0.0], vec![0.5, 0.25]],
            vec![
                vec![
                    Distribution::new(vec![0.9, 0.1]).unwrap(),
                    Distribution::new(vec![0.2, 0.8]).unwrap(),
                ],
                vec![
                    Distribution::new(vec![0.5, 0.5]).unwrap(),
                    Distribution::point_mass(2, 1).unwrap(),
                ],
            ],
            Distribution::new(vec![0.6, 0.4]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn validates_reward_range() {
        let err = EnvSpec::new(
            1,
            1.0,
            vec![vec![1.5]],
            vec![vec![Distribution::point_mass(1, 0).unwrap()]],
            Distribution::point_mass(1, 0).unwrap(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let text = r#"
            states = 2
            actions = 2
            horizon = 3
            r_max = 1.0
            rewards = [[1.0, 0.0], [0.5, 0.25]]
            transitions = [
                [[0.9, 0.1], [0.2, 0.8]],
                [[0.5, 0.5], [0.0, 1.0]],
            ]
            initial = [0.6, 0.4]
        "#;
        let env = EnvSpec::from_toml_str(text).unwrap();
        assert_eq!(env.state_count(), 2);
        assert_eq!(env.horizon(), 3);
        assert_eq!(env.reward(1, 1), 0.25);
        assert_eq!(env.transition(1, 1).prob(1), 1.0);
    }

    #[test]
    fn toml_rejects_bad_rows() {
        let text = r#"
            states = 2
            actions = 2
            horizon = 1
            r_max = 1.0
            rewards = [[1.0, 0.0], [0.5, 0.25]]
            transitions = [
                [[0.9, 0.2], [0.2, 0.8]],
                [[0.5, 0.5], [0.0, 1.0]],
            ]
            initial = [0.6, 0.4]
        "#;
        assert!(EnvSpec::from_toml_str(text).is_err());
    }
}
