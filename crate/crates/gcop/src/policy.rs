//! Guide and core policies, exact composition, rollouts, and value estimates.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::env::EnvSpec;
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Reference to an endpoint configured in the gateway; carried by policies
/// that live behind a black-box API instead of a probability table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointRef {
    pub model_id: String,
}

/// Tabular guide: one strategy distribution per state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularGuide {
    strategy_ids: Vec<String>,
    rows: Vec<Distribution>,
}

impl TabularGuide {
    pub fn new(strategy_ids: Vec<String>, rows: Vec<Distribution>) -> Result<Self> {
        if strategy_ids.is_empty() {
            return Err(Error::EmptyInput("strategy space"));
        }
        for (s, row) in rows.iter().enumerate() {
            if row.len() != strategy_ids.len() {
                return Err(Error::DimensionMismatch(format!(
                    "guide row {s} covers {} strategies, expected {}",
                    row.len(),
                    strategy_ids.len()
                )));
            }
        }
        Ok(Self { strategy_ids, rows })
    }

    /// Uniform guide over `strategy_count` anonymous strategies.
    pub fn uniform(state_count: usize, strategy_count: usize) -> Result<Self> {
        let ids = (0..strategy_count).map(|z| format!("z{z}")).collect();
        let row = Distribution::uniform(strategy_count)?;
        Self::new(ids, vec![row; state_count])
    }

    pub fn strategy_ids(&self) -> &[String] {
        &self.strategy_ids
    }

    pub fn strategy_count(&self) -> usize {
        self.strategy_ids.len()
    }

    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, state: usize) -> &Distribution {
        &self.rows[state]
    }
}

/// Tabular core: one action distribution per (state, strategy) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularCore {
    /// `rows[state][strategy]` over actions.
    rows: Vec<Vec<Distribution>>,
}

impl TabularCore {
    pub fn new(rows: Vec<Vec<Distribution>>) -> Result<Self> {
        let strategy_count = rows.first().map(|r| r.len()).unwrap_or(0);
        if strategy_count == 0 {
            return Err(Error::EmptyInput("core table"));
        }
        let action_count = rows[0][0].len();
        for (s, row) in rows.iter().enumerate() {
            if row.len() != strategy_count {
                return Err(Error::DimensionMismatch(format!(
                    "core row {s} covers {} strategies, expected {strategy_count}",
                    row.len()
                )));
            }
            for (z, d) in row.iter().enumerate() {
                if d.len() != action_count {
                    return Err(Error::DimensionMismatch(format!(
                        "core({s},{z}) has {} actions, expected {action_count}",
                        d.len()
                    )));
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    pub fn strategy_count(&self) -> usize {
        self.rows[0].len()
    }

    pub fn action_count(&self) -> usize {
        self.rows[0][0].len()
    }

    pub fn row(&self, state: usize, strategy: usize) -> &Distribution {
        &self.rows[state][strategy]
    }
}

/// A guide policy: strategy distribution per state, tabular or external.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum GuidePolicy {
    Tabular(TabularGuide),
    External(EndpointRef),
}

/// A core policy: action distribution per (state, strategy), tabular or external.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CorePolicy {
    Tabular(TabularCore),
    External(EndpointRef),
}

/// An action distribution per state; the result of composing a tabular
/// guide with a tabular core, and the representation used for teachers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionPolicy {
    rows: Vec<Distribution>,
}

impl ActionPolicy {
    pub fn new(rows: Vec<Distribution>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("action policy"));
        }
        let width = rows[0].len();
        for (s, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::DimensionMismatch(format!(
                    "action row {s} has {} entries, expected {width}",
                    row.len()
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    pub fn action_count(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, state: usize) -> &Distribution {
        &self.rows[state]
    }
}

/// Composes guide and core into the induced per-state action distribution
/// `sum_z guide(z|s) * core(a|s,z)`.
///
/// Exact composition requires tabular inputs and matching strategy spaces.
pub fn compose(guide: &GuidePolicy, core: &CorePolicy) -> Result<ActionPolicy> {
    let guide = match guide {
        GuidePolicy::Tabular(t) => t,
        GuidePolicy::External(_) => return Err(Error::NotTabular("guide")),
    };
    let core = match core {
        CorePolicy::Tabular(t) => t,
        CorePolicy::External(_) => return Err(Error::NotTabular("core")),
    };
    compose_tabular(guide, core)
}

pub fn compose_tabular(guide: &TabularGuide, core: &TabularCore) -> Result<ActionPolicy> {
    if guide.state_count() != core.state_count() {
        return Err(Error::DimensionMismatch(format!(
            "guide has {} states, core has {}",
            guide.state_count(),
            core.state_count()
        )));
    }
    if guide.strategy_count() != core.strategy_count() {
        return Err(Error::StrategySpaceMismatch(format!(
            "guide proposes over {} strategies, core executes {}",
            guide.strategy_count(),
            core.strategy_count()
        )));
    }
    let rows = (0..guide.state_count())
        .map(|s| {
            let mut probs = vec![0.0; core.action_count()];
            for z in 0..guide.strategy_count() {
                let w = guide.row(s).prob(z);
                for (a, p) in core.row(s, z).probs().iter().enumerate() {
                    probs[a] += w * p;
                }
            }
            Distribution::new(probs)
        })
        .collect::<Result<Vec<_>>>()?;
    ActionPolicy::new(rows)
}

/// One environment step of a recorded episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
}

/// A full `horizon`-step episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Appends this trajectory as one JSON record per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }
}

/// Writes a batch of trajectories as line-delimited JSON.
pub fn write_trajectories_jsonl(path: impl AsRef<Path>, trajectories: &[Trajectory]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for t in trajectories {
        t.write_jsonl(&mut file)?;
    }
    Ok(())
}

fn check_dims(policy: &ActionPolicy, env: &EnvSpec) -> Result<()> {
    if policy.state_count() != env.state_count() || policy.action_count() != env.action_count() {
        return Err(Error::DimensionMismatch(format!(
            "policy is {}x{}, environment is {}x{}",
            policy.state_count(),
            policy.action_count(),
            env.state_count(),
            env.action_count()
        )));
    }
    Ok(())
}

/// Samples one full episode. Bit-reproducible for a fixed seed.
pub fn rollout(policy: &ActionPolicy, env: &EnvSpec, seed: u64) -> Result<Trajectory> {
    check_dims(policy, env)?;
    let mut rng = rng_from_seed(seed);
    let mut state = env.initial().sample(&mut rng);
    let mut steps = Vec::with_capacity(env.horizon());
    for _ in 0..env.horizon() {
        let action = policy.row(state).sample(&mut rng);
        let reward = env.reward(state, action);
        steps.push(Step { state, action, reward });
        state = env.transition(state, action).sample(&mut rng);
    }
    Ok(Trajectory { seed, steps })
}

fn episode_return(policy: &ActionPolicy, env: &EnvSpec, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut state = env.initial().sample(&mut rng);
    let mut total = 0.0;
    for _ in 0..env.horizon() {
        let action = policy.row(state).sample(&mut rng);
        total += env.reward(state, action);
        state = env.transition(state, action).sample(&mut rng);
    }
    total
}

/// Monte-Carlo value estimate with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub episodes: usize,
}

/// Estimates the policy value over `episodes` independent rollouts.
///
/// Episode `i` owns the generator seeded by `derive_seed(seed, i)`, so the
/// batch may run in parallel without affecting the result.
pub fn estimate_value(
    policy: &ActionPolicy,
    env: &EnvSpec,
    episodes: usize,
    seed: u64,
) -> Result<ValueEstimate> {
    if episodes == 0 {
        return Err(Error::InvalidParameter(
            "value estimation needs at least one episode".into(),
        ));
    }
    check_dims(policy, env)?;
    let returns: Vec<f64> = (0..episodes)
        .into_par_iter()
        .map(|i| episode_return(policy, env, derive_seed(seed, i as u64)))
        .collect();
    let n = episodes as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let half_width = if episodes < 2 {
        0.0
    } else {
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        1.959963984540054 * (var / n).sqrt()
    };
    Ok(ValueEstimate { mean, half_width, episodes })
}

/// On-disk layout for a tabular guide/core pair.
#[derive(Debug, Serialize, Deserialize)]
struct RawPolicies {
    strategies: Vec<String>,
    /// `guide[s][z]`
    guide: Vec<Vec<f64>>,
    /// `core[s][z][a]`
    core: Vec<Vec<Vec<f64>>>,
}

/// Loads a tabular guide and core from a TOML document with keys
/// `strategies`, `guide`, `core`.
pub fn policies_from_toml_str(text: &str) -> Result<(GuidePolicy, CorePolicy)> {
    let raw: RawPolicies = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let guide_rows = raw
        .guide
        .into_iter()
        .map(Distribution::new)
        .collect::<Result<Vec<_>>>()?;
    let guide = TabularGuide::new(raw.strategies, guide_rows)?;
    let core_rows = raw
        .core
        .into_iter()
        .map(|row| row.into_iter().map(Distribution::new).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let core = TabularCore::new(core_rows)?;
    if core.state_count() != guide.state_count() || core.strategy_count() != guide.strategy_count()
    {
        return Err(Error::StrategySpaceMismatch(
            "guide and core tables disagree on states or strategies".into(),
        ));
    }
    Ok((GuidePolicy::Tabular(guide), CorePolicy::Tabular(core)))
}

pub fn policies_from_path(path: impl AsRef<Path>) -> Result<(GuidePolicy, CorePolicy)> {
    let text = std::fs::read_to_string(path)?;
    policies_from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn const_reward_env(horizon: usize) -> EnvSpec {
        EnvSpec::new(
            horizon,
            1.0,
            vec![vec![1.0, 1.0]],
            vec![vec![
                Distribution::point_mass(1, 0).unwrap(),
                Distribution::point_mass(1, 0).unwrap(),
            ]],
            Distribution::point_mass(1, 0).unwrap(),
        )
        .unwrap()
    }

    fn core_2z() -> TabularCore {
        // z0 always picks a0, z1 always picks a1.
        TabularCore::new(vec![vec![
            Distribution::point_mass(2, 0).unwrap(),
            Distribution::point_mass(2, 1).unwrap(),
        ]])
        .unwrap()
    }

    #[test]
    fn deterministic_guide_collapses_to_single_strategy() {
        let guide = TabularGuide::new(
            vec!["z0".into(), "z1".into()],
            vec![Distribution::point_mass(2, 0).unwrap()],
        )
        .unwrap();
        let composed =
            compose(&GuidePolicy::Tabular(guide), &CorePolicy::Tabular(core_2z())).unwrap();
        assert_eq!(composed.row(0).probs(), &[1.0, 0.0]);
    }

    #[test]
    fn uniform_guide_mixes_evenly() {
        let guide = TabularGuide::uniform(1, 2).unwrap();
        let composed =
            compose(&GuidePolicy::Tabular(guide), &CorePolicy::Tabular(core_2z())).unwrap();
        assert!((composed.row(0).prob(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn composition_matches_brute_force_summation() {
        let mut rng = rng_from_seed(314);
        let states = 4;
        let strategies = 3;
        let actions = 5;
        let guide_rows: Vec<Distribution> = (0..states)
            .map(|_| Distribution::random_flat_dirichlet(&mut rng, strategies).unwrap())
            .collect();
        let core_rows: Vec<Vec<Distribution>> = (0..states)
            .map(|_| {
                (0..strategies)
                    .map(|_| Distribution::random_flat_dirichlet(&mut rng, actions).unwrap())
                    .collect()
            })
            .collect();
        let guide =
            TabularGuide::new((0..strategies).map(|z| format!("z{z}")).collect(), guide_rows.clone())
                .unwrap();
        let core = TabularCore::new(core_rows.clone()).unwrap();
        let composed = compose_tabular(&guide, &core).unwrap();

        for s in 0..states {
            for a in 0..actions {
                let mut expected = 0.0;
                for z in 0..strategies {
                    expected += guide_rows[s].prob(z) * core_rows[s][z].prob(a);
                }
                assert!((composed.row(s).prob(a) - expected).abs() < 1e-15);
            }
            let sum: f64 = composed.row(s).probs().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn compose_rejects_mismatch_and_external() {
        let guide = GuidePolicy::Tabular(TabularGuide::uniform(1, 3).unwrap());
        let core = CorePolicy::Tabular(core_2z());
        assert!(matches!(compose(&guide, &core), Err(Error::StrategySpaceMismatch(_))));

        let ext = GuidePolicy::External(EndpointRef { model_id: "m".into() });
        assert!(matches!(compose(&ext, &core), Err(Error::NotTabular("guide"))));
    }

    #[test]
    fn rollout_constant_reward_and_determinism() {
        let env = const_reward_env(3);
        let policy = ActionPolicy::new(vec![Distribution::uniform(2).unwrap()]).unwrap();
        let t = rollout(&policy, &env, 11).unwrap();
        assert_eq!(t.steps.len(), 3);
        assert_eq!(t.total_reward(), 3.0);
        assert_eq!(t, rollout(&policy, &env, 11).unwrap());
    }

    #[test]
    fn rollout_rejects_dimension_mismatch() {
        let env = const_reward_env(2);
        let policy = ActionPolicy::new(vec![Distribution::uniform(3).unwrap()]).unwrap();
        assert!(rollout(&policy, &env, 0).is_err());
    }

    #[test]
    fn estimate_value_deterministic_env() {
        let env = const_reward_env(4);
        let policy = ActionPolicy::new(vec![Distribution::uniform(2).unwrap()]).unwrap();
        let est = estimate_value(&policy, &env, 64, 5).unwrap();
        assert_eq!(est.mean, 4.0);
        assert_eq!(est.half_width, 0.0);
        assert!(estimate_value(&policy, &env, 0, 5).is_err());
    }

    #[test]
    fn estimate_value_bernoulli_concentrates() {
        // Reward 1 with probability 0.5 under a uniform two-action policy.
        let env = EnvSpec::new(
            1,
            1.0,
            vec![vec![1.0, 0.0]],
            vec![vec![
                Distribution::point_mass(1, 0).unwrap(),
                Distribution::point_mass(1, 0).unwrap(),
            ]],
            Distribution::point_mass(1, 0).unwrap(),
        )
        .unwrap();
        let policy = ActionPolicy::new(vec![Distribution::uniform(2).unwrap()]).unwrap();
        let est = estimate_value(&policy, &env, 100_000, 99).unwrap();
        assert!((est.mean - 0.5).abs() < 0.01, "mean = {}", est.mean);
        assert!(est.mean >= 0.0 && est.mean <= env.horizon() as f64 * env.r_max());
    }

    #[test]
    fn trajectories_export_as_jsonl() {
        let env = const_reward_env(2);
        let policy = ActionPolicy::new(vec![Distribution::uniform(2).unwrap()]).unwrap();
        let t = rollout(&policy, &env, 1).unwrap();
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        let parsed: Trajectory = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(parsed, t);
    }

    #[test]
    fn policies_load_from_toml() {
        let text = r#"
            strategies = ["direct", "stepwise"]
            guide = [[0.25, 0.75]]
            core = [[[1.0, 0.0], [0.0, 1.0]]]
        "#;
        let (guide, core) = policies_from_toml_str(text).unwrap();
        let composed = compose(&guide, &core).unwrap();
        assert!((composed.row(0).prob(1) - 0.75).abs() < 1e-15);
    }
}
